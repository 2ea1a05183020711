//! Upper-triangular mapping, at thread granularity.
//!
//! Thread `k` of the `N(N-1)/2` strictly-upper pairs gets the 1-based pair
//!
//! ```text
//! a = floor((-(2N+1) + sqrt(4N^2 - 4N - 8k + 1)) / -2)
//! b = (a+1) + k - (a-1)(2N-a)/2
//! ```
//!
//! and covers the lower-triangle cell `(b-1, a-1)` by transposition. The
//! square root runs through a [`SqrtEngine`]; the row is then repaired with
//! the same block-level conditionals LTM uses.

use super::{BlockCoord, BlockTarget, GridMapper, GridSpec, Pass, PassKind, StrategyKind, ThreadCoord};
use crate::error::{Error, Result};
use crate::fastmath::{float_sqrt, isqrt, SqrtEngine, SqrtVariant};
use crate::tri::{ceil_sqrt, tri_count, Diagonal, ProblemSize, TriCoord, MAX_ELEMS};
use core::num::Wrapping as W;
use alloc::vec;

/// 0-based strictly-upper pair, `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UpperPair {
    pub a: u32,
    pub b: u32,
}

impl UpperPair {
    #[inline]
    pub fn one_based(self) -> (u32, u32) {
        (self.a + 1, self.b + 1)
    }

    /// The lower-triangle cell this pair stands for.
    #[inline]
    pub fn transpose(self) -> TriCoord {
        TriCoord::new(self.b, self.a)
    }
}

/// Pairs preceding 1-based row `a`: `(a-1)(2N-a)/2`.
#[inline(always)]
fn pairs_before(a: W<u64>, n: W<u64>) -> W<u64> {
    (a - W(1)) * (W(2) * n - a) / W(2)
}

/// Row guess from one of the float engines, before repair, given the
/// discriminant `4N^2 - 4N - 8k + 1` and `2N + 1` in binary32.
#[inline(always)]
fn float_guess(disc: f32, two_n_plus_1: f32, variant: SqrtVariant) -> i32 {
    let s = float_sqrt(variant, disc);
    // Halving is exact, so this rounds the same as dividing by -2. The row
    // is below 2^20, so the cast to i32 only truncates.
    ((two_n_plus_1 - s) * 0.5) as i32
}

/// Moves a guess to the true row and derives the column.
#[inline(always)]
fn repair(guess: W<u64>, k: W<u64>, n: W<u64>) -> UpperPair {
    let mut a = guess.clamp(W(1), n - W(1));
    while a > W(1) && pairs_before(a, n) > k {
        a -= W(1);
    }
    while a + W(1) < n && pairs_before(a + W(1), n) <= k {
        a += W(1);
    }
    let b = a + W(1) + k - pairs_before(a, n);
    UpperPair {
        a: (a.0 - 1) as u32,
        b: (b.0 - 1) as u32,
    }
}

// Callers keep 2 <= n <= MAX_ELEMS and k below the pair count, where
// nothing overflows. Wrapping arithmetic keeps overflow checks off the
// per-thread path in checked builds.
#[inline(always)]
fn utm_pair(k: u64, n: u64, engine: SqrtEngine) -> UpperPair {
    debug_assert!((2..=MAX_ELEMS as u64).contains(&n) && k < n * (n - 1) / 2);
    let (k, n) = (W(k), W(n));
    let guess = match engine.variant {
        // within one row of the true floor; the repair settles it
        SqrtVariant::ExactInteger => {
            let disc = W(4) * n * n - W(4) * n - W(8) * k + W(1);
            (W(2) * n + W(1) - W(isqrt(disc.0))) / W(2)
        }
        v => {
            let disc = W(4) * n * n - W(4) * n - W(8) * k + W(1);
            // signed conversions are single instructions; both fit
            let g = float_guess(disc.0 as i64 as f32, (W(2) * n + W(1)).0 as i64 as f32, v);
            W(g.max(1) as u64)
        }
    };
    repair(guess, k, n)
}

/// Pair for thread `k` over `n_elems` elements, using the fast inverse
/// square root as the original formulation did.
pub fn utm_map(k: u64, n_elems: u32) -> Result<UpperPair> {
    utm_map_with(k, n_elems, SqrtEngine::newton())
}

pub fn utm_map_with(k: u64, n_elems: u32, engine: SqrtEngine) -> Result<UpperPair> {
    let count = tri_count(n_elems as u64, Diagonal::Excluded);
    if k >= count {
        return Err(Error::IndexOutOfRange { index: k, count });
    }
    Ok(utm_pair(k, n_elems as u64, engine))
}

/// Threads are numbered `k = block * rho^2 + ty * rho + tx`, blocks laid out
/// on a balanced square grid.
#[derive(Debug, Clone)]
pub struct UtmMapper {
    size: ProblemSize,
    engine: SqrtEngine,
    pairs: u64,
    side: u64,
    grid: GridSpec,
}

impl UtmMapper {
    pub fn new(n_elems: u32, rho: u32, engine: SqrtEngine) -> Result<Self> {
        let size = ProblemSize::new(n_elems, rho)?;
        let pairs = tri_count(n_elems as u64, Diagonal::Excluded);
        let per_block = rho as u64 * rho as u64;
        let blocks = pairs.div_ceil(per_block).max(1);
        let side = ceil_sqrt(blocks);
        let grid = GridSpec {
            strategy: StrategyKind::Utm,
            rho,
            passes: vec![Pass {
                blocks_x: side as u32,
                blocks_y: side as u32,
                kind: PassKind::Full,
            }],
        };
        Ok(Self {
            size,
            engine,
            pairs,
            side,
            grid,
        })
    }

    #[inline(always)]
    fn first_thread(&self, b: BlockCoord) -> u64 {
        let rho = self.size.rho() as u64;
        (b.x as u64 + b.y as u64 * self.side) * rho * rho
    }
}

impl GridMapper for UtmMapper {
    #[inline]
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    fn n_elems(&self) -> u32 {
        self.size.n_elems()
    }

    #[inline]
    fn domain(&self) -> Diagonal {
        Diagonal::Excluded
    }

    #[inline(always)]
    fn map_block(&self, _pass: usize, b: BlockCoord) -> BlockTarget {
        if self.first_thread(b) >= self.pairs {
            BlockTarget::Discard
        } else {
            BlockTarget::PerThread
        }
    }

    #[inline(always)]
    fn map_thread(&self, _pass: usize, b: BlockCoord, t: ThreadCoord) -> Option<TriCoord> {
        let k = self.first_thread(b) + (t.y * self.size.rho() + t.x) as u64;
        if k >= self.pairs {
            return None;
        }
        Some(utm_pair(k, self.size.n_elems() as u64, self.engine).transpose())
    }

    #[inline(always)]
    fn maps_thread_runs(&self) -> bool {
        true
    }

    /// All float guesses first, in a loop the compiler can vectorize, then
    /// the integer repair thread by thread.
    #[inline(always)]
    fn map_thread_run(&self, pass: usize, b: BlockCoord, first: ThreadCoord, out: &mut [Option<TriCoord>]) {
        const LANES: usize = 16;
        let variant = self.engine.variant;
        if variant == SqrtVariant::ExactInteger || out.len() > LANES {
            for (dx, slot) in (0..).zip(out.iter_mut()) {
                *slot = self.map_thread(pass, b, ThreadCoord { x: first.x + dx, y: first.y });
            }
            return;
        }
        let n = W(self.size.n_elems() as u64);
        let k0 = self.first_thread(b) + (first.y * self.size.rho() + first.x) as u64;
        // Lane offsets of the discriminant, -8 per thread.
        const OFFSETS: [f64; LANES] = {
            let mut o = [0.0; LANES];
            let mut lane = 0;
            while lane < LANES {
                o[lane] = 8.0 * lane as f64;
                lane += 1;
            }
            o
        };
        // Every integer here is below 2^53, so the f64 steps are exact and
        // the single rounding to f32 matches converting the integer
        // directly. Unlike i64, f64 converts to f32 in vector lanes.
        let base = (W(4) * n * n - W(4) * n - W(8) * W(k0) + W(1)).0 as i64 as f64;
        let two_n_plus_1 = (W(2) * n + W(1)).0 as i64 as f32;
        let mut guess = [0i32; LANES];
        for (g, off) in guess.iter_mut().zip(OFFSETS) {
            *g = float_guess((base - off) as f32, two_n_plus_1, variant);
        }
        for (lane, slot) in out.iter_mut().enumerate() {
            let k = k0 + lane as u64;
            *slot = if k < self.pairs {
                Some(repair(W(guess[lane].max(1) as u64), W(k), n).transpose())
            } else {
                None
            };
        }
    }
}
