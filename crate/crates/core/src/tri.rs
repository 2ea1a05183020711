//! Packed lower-triangle arithmetic.
//!
//! Cells of an `n x n` lower triangle are numbered row by row:
//!
//! ```text
//! 0
//! 1 2
//! 3 4 5
//! ...
//! ```
//!
//! so cell `(i, j)` with `j <= i` has linear index `i(i+1)/2 + j`. The same
//! numbering is used for blocks (LTM's `lambda`) and for elements (the packed
//! EDM buffer).

use crate::error::{Error, Result};

/// Largest supported element count per dimension.
pub const MAX_ELEMS: u32 = 1 << 20;

/// Whether the diagonal belongs to the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Diagonal {
    /// `0 <= j <= i`
    Included,
    /// `0 <= j < i`
    Excluded,
}

impl Diagonal {
    #[inline]
    pub fn contains(self, i: u32, j: u32) -> bool {
        match self {
            Diagonal::Included => j <= i,
            Diagonal::Excluded => j < i,
        }
    }
}

/// Element count `N` per dimension, dimensional blocksize `rho`, and the
/// derived block count `n = ceil(N / rho)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProblemSize {
    n_elems: u32,
    rho: u32,
}

impl ProblemSize {
    pub fn new(n_elems: u32, rho: u32) -> Result<Self> {
        if n_elems == 0 || n_elems > MAX_ELEMS {
            return Err(Error::InvalidElementCount(n_elems as u64));
        }
        if rho == 0 {
            return Err(Error::InvalidBlocksize);
        }
        Ok(Self { n_elems, rho })
    }

    #[inline]
    pub fn n_elems(&self) -> u32 {
        self.n_elems
    }

    #[inline]
    pub fn rho(&self) -> u32 {
        self.rho
    }

    /// Blocks per dimension, `ceil(N / rho)`.
    #[inline]
    pub fn blocks(&self) -> u32 {
        self.n_elems.div_ceil(self.rho)
    }

    /// Blocks needed to cover the lower triangle, `n(n+1)/2`.
    #[inline]
    pub fn tri_blocks(&self) -> u64 {
        tri_count(self.blocks() as u64, Diagonal::Included)
    }
}

/// Coordinate `(i, j)` in problem space: row `i`, column `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TriCoord {
    pub i: u32,
    pub j: u32,
}

impl TriCoord {
    #[inline]
    pub const fn new(i: u32, j: u32) -> Self {
        Self { i, j }
    }
}

/// Linear index `lambda` of a cell (or block) in packed lower-triangle order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockLinearIndex(pub u64);

impl BlockLinearIndex {
    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }
}

/// Number of cells in an `n`-row lower triangle.
#[inline]
pub const fn tri_count(n: u64, diag: Diagonal) -> u64 {
    match diag {
        Diagonal::Included => n * (n + 1) / 2,
        Diagonal::Excluded => n * n.saturating_sub(1) / 2,
    }
}

/// `lambda = i(i+1)/2 + j` for a cell on or below the diagonal.
pub fn tri_linear_index(c: TriCoord) -> Result<BlockLinearIndex> {
    if c.j > c.i {
        return Err(Error::OutsideDomain { i: c.i, j: c.j });
    }
    Ok(BlockLinearIndex(packed_index(c.i, c.j)))
}

/// Unchecked packed index; `j <= i` is the caller's responsibility.
#[inline(always)]
pub(crate) fn packed_index(i: u32, j: u32) -> u64 {
    let i = i as u64;
    i * (i + 1) / 2 + j as u64
}

/// Lazily enumerates the lower triangle in ascending packed order.
pub fn enumerate_lower(n: u32, diag: Diagonal) -> LowerTriangle {
    let start = match diag {
        Diagonal::Included => TriCoord::new(0, 0),
        Diagonal::Excluded => TriCoord::new(1, 0),
    };
    LowerTriangle {
        n,
        diag,
        next: start,
        remaining: tri_count(n as u64, diag),
    }
}

#[derive(Debug, Clone)]
pub struct LowerTriangle {
    n: u32,
    diag: Diagonal,
    next: TriCoord,
    remaining: u64,
}

impl Iterator for LowerTriangle {
    type Item = TriCoord;

    fn next(&mut self) -> Option<TriCoord> {
        if self.remaining == 0 {
            return None;
        }
        let out = self.next;
        self.remaining -= 1;
        let TriCoord { i, j } = out;
        self.next = if self.diag.contains(i, j + 1) {
            TriCoord::new(i, j + 1)
        } else {
            TriCoord::new(i + 1, 0)
        };
        debug_assert!(self.remaining == 0 || self.next.i < self.n);
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (r, Some(r))
    }
}

impl ExactSizeIterator for LowerTriangle {}
impl core::iter::FusedIterator for LowerTriangle {}

/// Side of the balanced square grid holding `n(n+1)/2` blocks:
/// `ceil(sqrt(n(n+1)/2))`.
pub fn grid_side_balanced(n: u64) -> u64 {
    ceil_sqrt(tri_count(n, Diagonal::Included))
}

#[inline]
pub(crate) fn ceil_sqrt(v: u64) -> u64 {
    let r = v.isqrt();
    if r * r == v {
        r
    } else {
        r + 1
    }
}
