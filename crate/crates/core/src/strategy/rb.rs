//! Rectangular box: the right part of the triangle is rotated and stacked
//! above the diagonal of the left part, giving a dense rectangle of exactly
//! `N(N+1)/2` threads.
//!
//! - even `N`: `N/2` columns by `N+1` rows. Below the diagonal
//!   (`t_x < t_y`) a thread covers `(t_y - 1, t_x)`; otherwise
//!   `(N - t_y - 1, N - t_x - 1)`.
//! - odd `N`: `(N+1)/2` columns by `N` rows. `t_x <= t_y` covers
//!   `(t_y, t_x)`; otherwise `(N - 1 - t_y, N - t_x)`.

use super::{
    BlockCoord, BlockTarget, GridMapper, GridSpec, MapOutcome, Pass, PassKind, StrategyKind, ThreadCoord,
};
use crate::error::{Error, Result};
use crate::tri::{ProblemSize, TriCoord};
use alloc::vec;

/// Thread rectangle, in threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RbRect {
    pub cols: u32,
    pub rows: u32,
}

impl RbRect {
    pub fn slots(&self) -> u64 {
        self.cols as u64 * self.rows as u64
    }
}

pub fn rb_rect(n_elems: u32) -> Result<RbRect> {
    if n_elems < 2 {
        return Err(Error::RectangleTooSmall(n_elems));
    }
    Ok(if n_elems % 2 == 0 {
        RbRect {
            cols: n_elems / 2,
            rows: n_elems + 1,
        }
    } else {
        RbRect {
            cols: n_elems.div_ceil(2),
            rows: n_elems,
        }
    })
}

pub fn rb_grid(n_elems: u32, rho: u32) -> Result<GridSpec> {
    ProblemSize::new(n_elems, rho)?;
    let rect = rb_rect(n_elems)?;
    Ok(GridSpec {
        strategy: StrategyKind::Rb,
        rho,
        passes: vec![Pass {
            blocks_x: rect.cols.div_ceil(rho),
            blocks_y: rect.rows.div_ceil(rho),
            kind: PassKind::Full,
        }],
    })
}

/// Maps global thread `(t_x, t_y)`; threads outside the rectangle are
/// discarded. `n_elems >= 2`.
#[inline(always)]
pub fn rb_map(t_x: u32, t_y: u32, n_elems: u32) -> MapOutcome {
    let n = n_elems;
    if n % 2 == 0 {
        if t_x >= n / 2 || t_y > n {
            MapOutcome::Discard
        } else if t_x < t_y {
            MapOutcome::Mapped(TriCoord::new(t_y - 1, t_x))
        } else {
            MapOutcome::Mapped(TriCoord::new(n - t_y - 1, n - t_x - 1))
        }
    } else if t_x > n / 2 || t_y >= n {
        MapOutcome::Discard
    } else if t_x <= t_y {
        MapOutcome::Mapped(TriCoord::new(t_y, t_x))
    } else {
        MapOutcome::Mapped(TriCoord::new(n - 1 - t_y, n - t_x))
    }
}

#[derive(Debug, Clone)]
pub struct RbMapper {
    n_elems: u32,
    grid: GridSpec,
}

impl RbMapper {
    pub fn new(n_elems: u32, rho: u32) -> Result<Self> {
        Ok(Self {
            n_elems,
            grid: rb_grid(n_elems, rho)?,
        })
    }
}

impl GridMapper for RbMapper {
    #[inline]
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    fn n_elems(&self) -> u32 {
        self.n_elems
    }

    #[inline(always)]
    fn map_block(&self, _pass: usize, _b: BlockCoord) -> BlockTarget {
        BlockTarget::PerThread
    }

    #[inline(always)]
    fn map_thread(&self, _pass: usize, b: BlockCoord, t: ThreadCoord) -> Option<TriCoord> {
        let rho = self.grid.rho;
        rb_map(b.x * rho + t.x, b.y * rho + t.y, self.n_elems).mapped()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tri::{enumerate_lower, tri_count, Diagonal};
    use alloc::vec::Vec;

    fn covered(n: u32) -> Vec<TriCoord> {
        let rect = rb_rect(n).unwrap();
        let mut cells = Vec::new();
        for ty in 0..rect.rows + 2 {
            for tx in 0..rect.cols + 2 {
                if let MapOutcome::Mapped(c) = rb_map(tx, ty, n) {
                    assert!(tx < rect.cols && ty < rect.rows);
                    cells.push(c);
                }
            }
        }
        cells.sort();
        cells
    }

    #[test]
    fn rectangle_examples() {
        assert_eq!(rb_rect(6), Ok(RbRect { cols: 3, rows: 7 }));
        assert_eq!(rb_rect(6).unwrap().slots(), tri_count(6, Diagonal::Included));
        assert_eq!(rb_rect(2), Ok(RbRect { cols: 1, rows: 3 }));
        assert_eq!(rb_rect(7).unwrap().slots(), 28);
        assert_eq!(rb_rect(1), Err(Error::RectangleTooSmall(1)));
        assert!(rb_grid(0, 16).is_err());
    }

    #[test]
    fn map_examples() {
        assert_eq!(rb_map(0, 1, 6), MapOutcome::Mapped(TriCoord::new(0, 0)));
        assert_eq!(rb_map(2, 0, 6), MapOutcome::Mapped(TriCoord::new(5, 3)));
        assert_eq!(rb_map(1, 4, 6), MapOutcome::Mapped(TriCoord::new(3, 1)));
        assert_eq!(rb_map(3, 0, 6), MapOutcome::Discard);
        assert_eq!(rb_map(0, 7, 6), MapOutcome::Discard);
    }

    #[test]
    fn bijection_small() {
        for n in 2..=200u32 {
            let mut want: Vec<_> = enumerate_lower(n, Diagonal::Included).collect();
            want.sort();
            assert_eq!(covered(n), want, "n = {n}");
            assert_eq!(rb_rect(n).unwrap().slots(), tri_count(n as u64, Diagonal::Included));
        }
    }
}
