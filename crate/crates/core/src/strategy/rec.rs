//! Recursive partition for `N = m * 2^k`.
//!
//! Level `l` (1-based) covers `2^(k-l)` full squares of side
//! `s_l = m * 2^(l-1)`; square `q` spans rows `[(2q+1) s_l, (2q+2) s_l)` and
//! columns `[2q s_l, (2q+1) s_l)`. Each level is one launch. A final launch
//! covers the `2^k` diagonal triangles of side `m`, bounding-box style.
//! Square passes never filter threads; only the diagonal pass does.

use super::{BlockCoord, BlockTarget, GridMapper, GridSpec, Pass, PassKind, StrategyKind};
use crate::error::{Error, Result};
use crate::tri::{ProblemSize, TriCoord};
use alloc::vec::Vec;

/// Deepest `(m, k)` with `N = m * 2^k`, `k >= 1` and `m` a multiple of `rho`.
pub fn rec_decompose(n_elems: u32, rho: u32) -> Option<(u32, u32)> {
    if rho == 0 || n_elems == 0 {
        return None;
    }
    (1..=n_elems.trailing_zeros())
        .rev()
        .map(|k| (n_elems >> k, k))
        .find(|&(m, _)| m % rho == 0)
}

fn check(n_elems: u32, m: u32, k: u32, rho: u32) -> Result<()> {
    ProblemSize::new(n_elems, rho)?;
    let valid = (1..32).contains(&k) && m > 0 && m % rho == 0 && (m as u64) << k == n_elems as u64;
    if valid {
        Ok(())
    } else {
        Err(Error::NotRecursive { n: n_elems, rho })
    }
}

pub fn rec_schedule(n_elems: u32, m: u32, k: u32, rho: u32) -> Result<GridSpec> {
    check(n_elems, m, k, rho)?;
    let mut passes: Vec<Pass> = (1..=k)
        .map(|level| {
            let side = m << (level - 1);
            let side_blocks = side / rho;
            Pass {
                blocks_x: side_blocks,
                blocks_y: side_blocks << (k - level),
                kind: PassKind::RecSquares { level, side },
            }
        })
        .collect();
    passes.push(Pass {
        blocks_x: m / rho,
        blocks_y: (m / rho) << k,
        kind: PassKind::RecDiagonal { side: m },
    });
    Ok(GridSpec {
        strategy: StrategyKind::Rec,
        rho,
        passes,
    })
}

/// Element-space origin of block `local` inside square `q` of `level`.
#[inline(always)]
pub fn rec_block_map(level: u32, q: u32, local: BlockCoord, m: u32, rho: u32) -> TriCoord {
    let s = m << (level - 1);
    TriCoord::new((2 * q + 1) * s + local.y * rho, 2 * q * s + local.x * rho)
}

#[derive(Debug, Clone)]
pub struct RecMapper {
    n_elems: u32,
    m: u32,
    k: u32,
    grid: GridSpec,
}

impl RecMapper {
    pub fn new(n_elems: u32, m: u32, k: u32, rho: u32) -> Result<Self> {
        Ok(Self {
            n_elems,
            m,
            k,
            grid: rec_schedule(n_elems, m, k, rho)?,
        })
    }

    /// Uses [`rec_decompose`].
    pub fn auto(n_elems: u32, rho: u32) -> Result<Self> {
        let (m, k) = rec_decompose(n_elems, rho).ok_or(Error::NotRecursive { n: n_elems, rho })?;
        Self::new(n_elems, m, k, rho)
    }

    pub fn base(&self) -> u32 {
        self.m
    }

    pub fn levels(&self) -> u32 {
        self.k
    }
}

impl GridMapper for RecMapper {
    #[inline]
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    fn n_elems(&self) -> u32 {
        self.n_elems
    }

    #[inline(always)]
    fn map_block(&self, pass: usize, b: BlockCoord) -> BlockTarget {
        let rho = self.grid.rho;
        match self.grid.passes[pass].kind {
            PassKind::RecSquares { level, side } => {
                let side_blocks = side / rho;
                let local = BlockCoord::new(b.x, b.y % side_blocks);
                BlockTarget::Tile {
                    origin: rec_block_map(level, b.y / side_blocks, local, self.m, rho),
                    filter: false,
                }
            }
            PassKind::RecDiagonal { side } => {
                let side_blocks = side / rho;
                let (t, ly) = (b.y / side_blocks, b.y % side_blocks);
                if b.x > ly {
                    BlockTarget::Discard
                } else {
                    let base = t * side;
                    BlockTarget::Tile {
                        origin: TriCoord::new(base + ly * rho, base + b.x * rho),
                        filter: b.x == ly,
                    }
                }
            }
            PassKind::Full => unreachable!("REC grids only hold square and diagonal passes"),
        }
    }
}
