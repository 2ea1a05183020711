//! Bounding box: an `n x n` block grid over the whole square. Blocks above
//! the diagonal return at once; diagonal and ragged-edge blocks filter per
//! thread.

use super::{BlockCoord, BlockTarget, GridMapper, GridSpec, MapOutcome, Pass, PassKind, StrategyKind};
use crate::error::Result;
use crate::tri::{ProblemSize, TriCoord};
use alloc::vec;

/// Block-space mapping: `(i, j) = (y, x)` below or on the diagonal, discard
/// when `x > y`. Diagonal blocks still need the per-thread `j <= i` check.
#[inline(always)]
pub fn bb_map(b: BlockCoord) -> MapOutcome {
    if b.x > b.y {
        MapOutcome::Discard
    } else {
        MapOutcome::Mapped(TriCoord::new(b.y, b.x))
    }
}

#[derive(Debug, Clone)]
pub struct BbMapper {
    size: ProblemSize,
    grid: GridSpec,
}

impl BbMapper {
    pub fn new(n_elems: u32, rho: u32) -> Result<Self> {
        let size = ProblemSize::new(n_elems, rho)?;
        let n = size.blocks();
        let grid = GridSpec {
            strategy: StrategyKind::Bb,
            rho,
            passes: vec![Pass {
                blocks_x: n,
                blocks_y: n,
                kind: PassKind::Full,
            }],
        };
        Ok(Self { size, grid })
    }

    pub fn size(&self) -> ProblemSize {
        self.size
    }
}

impl GridMapper for BbMapper {
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
        match bb_map(b) {
            MapOutcome::Discard => BlockTarget::Discard,
            MapOutcome::Mapped(c) => {
                let rho = self.size.rho();
                BlockTarget::Tile {
                    origin: TriCoord::new(c.i * rho, c.j * rho),
                    filter: c.i == c.j || (c.i + 1) * rho > self.size.n_elems(),
                }
            }
        }
    }
}
