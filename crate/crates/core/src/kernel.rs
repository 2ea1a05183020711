//! Kernel bodies run by each surviving thread.

use core::sync::atomic::{AtomicU64, Ordering};

use crate::edm::{check_features, edm_pair, PointSet};
use crate::error::Result;
use crate::tri::{packed_index, TriCoord};

/// Which kernel a launch runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelSpec {
    /// Writes `i + j` to one fixed location.
    Dummy,
    /// Euclidean distance over `features` features.
    Edm { features: u32 },
}

impl KernelSpec {
    pub fn edm(features: u32) -> Result<Self> {
        check_features(features)?;
        Ok(KernelSpec::Edm { features })
    }

    /// Feature count, 0 for the dummy kernel.
    pub fn features(&self) -> u32 {
        match self {
            KernelSpec::Dummy => 0,
            KernelSpec::Edm { features } => *features,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Dummy => "dummy",
            KernelSpec::Edm { .. } => "edm",
        }
    }
}

/// Stores `i + j` into `sink`. Last writer wins; the value only exists so
/// the mapping cannot be optimized away.
#[inline(always)]
pub fn dummy_kernel(c: TriCoord, sink: &AtomicU64) {
    sink.store(c.i as u64 + c.j as u64, Ordering::Relaxed);
}

/// Packed slot and distance for cell `c`.
#[inline(always)]
pub fn edm_cell(points: &PointSet, c: TriCoord) -> (usize, f32) {
    (
        packed_index(c.i, c.j) as usize,
        edm_pair(points.point(c.i), points.point(c.j)),
    )
}
