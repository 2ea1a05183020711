use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coordinate ({i}, {j}) lies outside the lower triangle")]
    OutsideDomain { i: u32, j: u32 },

    #[error("linear index {index} out of range for a domain of {count} cells")]
    IndexOutOfRange { index: u64, count: u64 },

    #[error("element count {0} outside 1..=2^20")]
    InvalidElementCount(u64),

    #[error("blocksize must be positive")]
    InvalidBlocksize,

    #[error("exact integer square root needs a non-negative integer argument, got {0}")]
    NonIntegerArgument(f32),

    #[error("rectangular box needs N >= 2, got {0}")]
    RectangleTooSmall(u32),

    #[error("N = {n} is not m*2^k with k >= 1 and m a multiple of rho = {rho}")]
    NotRecursive { n: u32, rho: u32 },

    #[error("feature count {0} outside 1..=4")]
    InvalidFeatures(u32),

    #[error("point set holds {got} values, expected {expected}")]
    PointDataLength { expected: usize, got: usize },

    #[error("malformed packed EDM dump: {0}")]
    MalformedDump(&'static str),
}
