//! Mapping a rectangular grid of compute blocks onto lower-triangular
//! problem domains.
//!
//! The crate is `no_std` (it needs `alloc` for grid descriptors and packed
//! result buffers). It provides:
//!
//! - [`tri`]: packed lower-triangle arithmetic and the enumeration oracle.
//! - [`fastmath`]: the square-root engines used by the mapping functions.
//! - [`strategy`]: the five grid-to-domain strategies (BB, LTM, UTM, RB, REC)
//!   and a sequential block dispatcher shared with the parallel engine.
//! - [`edm`]: the Euclidean distance matrix workload and its packed dump format.
//! - [`kernel`]: the per-cell kernel bodies.

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod edm;
pub mod error;
pub mod fastmath;
pub mod kernel;
pub mod strategy;
pub mod tri;

pub use error::{Error, Result};
pub use fastmath::{SqrtEngine, SqrtVariant};
pub use strategy::{AnyMapper, BlockCoord, GridMapper, GridSpec, MapOutcome, Pass, StrategyKind};
pub use tri::{BlockLinearIndex, Diagonal, ProblemSize, TriCoord};
