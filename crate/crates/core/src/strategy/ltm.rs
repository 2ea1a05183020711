//! Lower-triangular mapping.
//!
//! A balanced `n' x n'` grid with `n' = ceil(sqrt(n(n+1)/2))` holds the
//! `n(n+1)/2` blocks of the triangle. Block `(x, y)` gets the linear index
//! `lambda = x + y*n'` and is placed at row
//! `i = floor(sqrt(1/4 + 2*lambda) - 1/2 + eps)`, column
//! `j = lambda - i(i+1)/2`. Blocks with `lambda >= n(n+1)/2` are padding.

use super::{BlockCoord, BlockTarget, GridMapper, GridSpec, Pass, PassKind, StrategyKind};
use crate::error::{Error, Result};
use crate::fastmath::{float_sqrt, isqrt, SqrtEngine, SqrtVariant};
use crate::tri::{grid_side_balanced, tri_count, BlockLinearIndex, Diagonal, ProblemSize, TriCoord};
use alloc::vec;

/// Block rows for which the float engines with `eps = 1e-4` are verified
/// exact over every `lambda` (`N = 30720` at `rho = 16`). Beyond it the row
/// is repaired with block-level conditionals.
pub const LTM_VERIFIED_BLOCKS: u32 = 1920;

/// Row of block `lambda` as computed by `engine`, without repair.
#[inline(always)]
pub fn ltm_row(lambda: u64, engine: SqrtEngine, diag: Diagonal) -> u64 {
    match engine.variant {
        SqrtVariant::ExactInteger => {
            let r = isqrt(8 * lambda + 1);
            match diag {
                Diagonal::Included => (r - 1) / 2,
                Diagonal::Excluded => r.div_ceil(2),
            }
        }
        v => {
            let x = 0.25f32 + 2.0f32 * lambda as f32;
            let shift = match diag {
                Diagonal::Included => -0.5f32,
                Diagonal::Excluded => 0.5f32,
            };
            // The saturating cast floors every value >= -1 into range and
            // sends the rest to 0, which is what floor-then-cast would give.
            (float_sqrt(v, x) + shift + engine.epsilon) as u64
        }
    }
}

/// First linear index of row `i`.
#[inline(always)]
fn row_start(i: u64, diag: Diagonal) -> u64 {
    match diag {
        Diagonal::Included => i * (i + 1) / 2,
        Diagonal::Excluded => i * i.saturating_sub(1) / 2,
    }
}

/// Moves `row` until `row_start(row) <= lambda < row_start(row + 1)`.
/// An approximate square root is off by at most one row in practice, so
/// this is normally a single compare each way.
#[inline(always)]
pub fn repair_row(mut row: u64, lambda: u64, diag: Diagonal) -> u64 {
    let min_row = match diag {
        Diagonal::Included => 0,
        Diagonal::Excluded => 1,
    };
    row = row.max(min_row);
    while row > min_row && row_start(row, diag) > lambda {
        row -= 1;
    }
    while row_start(row + 1, diag) <= lambda {
        row += 1;
    }
    row
}

#[inline(always)]
fn coord_from_row(row: u64, lambda: u64, diag: Diagonal) -> TriCoord {
    TriCoord::new(row as u32, lambda.wrapping_sub(row_start(row, diag)) as u32)
}

/// `g(lambda)`: block-space coordinates of block `lambda` in an `n`-row
/// triangle. The block-level repair is applied when `n` exceeds
/// [`LTM_VERIFIED_BLOCKS`].
pub fn ltm_map(lambda: BlockLinearIndex, n: u32, engine: SqrtEngine, diag: Diagonal) -> Result<TriCoord> {
    let count = tri_count(n as u64, diag);
    let lambda = lambda.get();
    if lambda >= count {
        return Err(Error::IndexOutOfRange { index: lambda, count });
    }
    let mut row = ltm_row(lambda, engine, diag);
    if n > LTM_VERIFIED_BLOCKS {
        row = repair_row(row, lambda, diag);
    }
    Ok(coord_from_row(row, lambda, diag))
}

/// `lambda = x + y*n'`.
#[inline(always)]
pub fn ltm_block_to_lambda(b: BlockCoord, n_prime: u64) -> BlockLinearIndex {
    BlockLinearIndex(b.x as u64 + b.y as u64 * n_prime)
}

#[derive(Debug, Clone)]
pub struct LtmMapper {
    size: ProblemSize,
    engine: SqrtEngine,
    n_prime: u64,
    tri_blocks: u64,
    repair: bool,
    grid: GridSpec,
}

impl LtmMapper {
    /// The exact-integer engine is reported under the `ltm-r` tag.
    pub fn new(n_elems: u32, rho: u32, engine: SqrtEngine) -> Result<Self> {
        let size = ProblemSize::new(n_elems, rho)?;
        let n = size.blocks();
        let n_prime = grid_side_balanced(n as u64);
        let strategy = match engine.variant {
            SqrtVariant::NativeSingle => StrategyKind::LtmX,
            SqrtVariant::NewtonRaphson => StrategyKind::LtmN,
            SqrtVariant::Reciprocal | SqrtVariant::ExactInteger => StrategyKind::LtmR,
        };
        let grid = GridSpec {
            strategy,
            rho,
            passes: vec![Pass {
                blocks_x: n_prime as u32,
                blocks_y: n_prime as u32,
                kind: PassKind::Full,
            }],
        };
        Ok(Self {
            size,
            engine,
            n_prime,
            tri_blocks: size.tri_blocks(),
            repair: n > LTM_VERIFIED_BLOCKS,
            grid,
        })
    }

    /// Forces the block-level repair on or off.
    pub fn with_repair(mut self, repair: bool) -> Self {
        self.repair = repair;
        self
    }

    pub fn engine(&self) -> SqrtEngine {
        self.engine
    }

    pub fn n_prime(&self) -> u64 {
        self.n_prime
    }

    pub fn size(&self) -> ProblemSize {
        self.size
    }
}

impl GridMapper for LtmMapper {
    #[inline]
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    fn n_elems(&self) -> u32 {
        self.size.n_elems()
    }

    #[inline(always)]
    fn map_block(&self, _pass: usize, b: BlockCoord) -> BlockTarget {
        let lambda = ltm_block_to_lambda(b, self.n_prime).get();
        if lambda >= self.tri_blocks {
            return BlockTarget::Discard;
        }
        let mut row = ltm_row(lambda, self.engine, Diagonal::Included);
        if self.repair {
            row = repair_row(row, lambda, Diagonal::Included);
        }
        let c = coord_from_row(row, lambda, Diagonal::Included);
        let rho = self.size.rho();
        BlockTarget::Tile {
            origin: TriCoord::new(c.i * rho, c.j * rho),
            filter: c.i == c.j || (c.i + 1) * rho > self.size.n_elems(),
        }
    }
}
