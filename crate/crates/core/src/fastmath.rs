//! Square-root engines used inside the mapping functions.
//!
//! The float engines all work in binary32, as a GPU kernel would. The
//! repair constant `epsilon` is added before flooring so that a square root
//! that lands a few ulps below an integer boundary still floors to the right
//! row.

use crate::error::{Error, Result};

/// Initial-guess constant of the Carmack/Lomont inverse square root.
pub const MAGIC: u32 = 0x5f37_59df;

/// Newton-Raphson refinements applied by [`SqrtVariant::NewtonRaphson`].
pub const NEWTON_ITERATIONS: u32 = 3;

/// Additive repair applied before flooring by the approximate engines.
pub const REPAIR_EPSILON: f32 = 1e-4;

/// `floor(sqrt(v))`, exact over the whole `u64` range.
#[inline]
pub fn isqrt(v: u64) -> u64 {
    v.isqrt()
}

/// Fast inverse square root: bit-level initial guess followed by
/// `iterations` Newton steps `y <- y * (1.5 - 0.5 * x * y^2)`.
///
/// The step is evaluated as a GPU compiler contracts it,
/// `y * fma(-(0.5x * y), y, 1.5)`. Without the fused multiply-add, three
/// steps leave `x * y` two ulps short of `1622.5` at `lambda = 1_316_253`,
/// more than the repair constant covers.
///
/// Only meaningful for positive, finite `x`.
#[inline]
pub fn fast_inv_sqrt(x: f32, iterations: u32) -> f32 {
    let half = 0.5 * x;
    let mut y = f32::from_bits(MAGIC.wrapping_sub(x.to_bits() >> 1));
    for _ in 0..iterations {
        y *= fmaf(-(half * y), y, 1.5);
    }
    y
}

/// `a * b + c` with a single rounding.
#[inline(always)]
fn fmaf(a: f32, b: f32, c: f32) -> f32 {
    #[cfg(feature = "std")]
    {
        a.mul_add(b, c)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::fmaf(a, b, c)
    }
}

/// Single-precision reciprocal square root standing in for the device
/// `rsqrtf` intrinsic: `1 / sqrtf(x)` rounded in binary32 (error <= 1 ulp,
/// well inside 2^-21 relative).
#[inline]
pub fn rsqrt_single(x: f32) -> f32 {
    1.0 / libm::sqrtf(x)
}

/// How a square root is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SqrtVariant {
    /// Platform binary32 square root (LTM-X).
    NativeSingle,
    /// `x * fast_inv_sqrt(x, 3)` (LTM-N).
    NewtonRaphson,
    /// `x * rsqrt_single(x)` (LTM-R).
    Reciprocal,
    /// Exact integer square root; the oracle.
    ExactInteger,
}

impl SqrtVariant {
    pub fn default_epsilon(self) -> f32 {
        match self {
            SqrtVariant::NewtonRaphson | SqrtVariant::Reciprocal => REPAIR_EPSILON,
            SqrtVariant::NativeSingle | SqrtVariant::ExactInteger => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqrtEngine {
    pub variant: SqrtVariant,
    pub epsilon: f32,
}

impl SqrtEngine {
    pub fn new(variant: SqrtVariant) -> Self {
        Self {
            variant,
            epsilon: variant.default_epsilon(),
        }
    }

    pub fn native() -> Self {
        Self::new(SqrtVariant::NativeSingle)
    }

    pub fn newton() -> Self {
        Self::new(SqrtVariant::NewtonRaphson)
    }

    pub fn reciprocal() -> Self {
        Self::new(SqrtVariant::Reciprocal)
    }

    pub fn exact() -> Self {
        Self::new(SqrtVariant::ExactInteger)
    }

    /// Same variant, different repair constant.
    pub fn with_epsilon(self, epsilon: f32) -> Self {
        Self { epsilon, ..self }
    }

    pub fn is_exact(&self) -> bool {
        self.variant == SqrtVariant::ExactInteger
    }
}

/// Binary32 square root for the float variants. `ExactInteger` never reaches
/// here; callers route it through integer arithmetic.
#[inline(always)]
pub(crate) fn float_sqrt(variant: SqrtVariant, x: f32) -> f32 {
    match variant {
        SqrtVariant::NewtonRaphson => x * fast_inv_sqrt(x, NEWTON_ITERATIONS),
        SqrtVariant::Reciprocal => x * rsqrt_single(x),
        SqrtVariant::NativeSingle | SqrtVariant::ExactInteger => libm::sqrtf(x),
    }
}

/// Evaluates `sqrt(x)` with the given engine.
///
/// `ExactInteger` accepts only non-negative integral `x` below `2^64` and
/// returns `isqrt(x)`. The float engines return their binary32
/// approximation; `NewtonRaphson` and `Reciprocal` need `x > 0`.
pub fn sqrt_via(engine: SqrtEngine, x: f32) -> Result<f32> {
    match engine.variant {
        SqrtVariant::ExactInteger => {
            // 2^64 as f32 is exact; anything at or above it does not fit a u64.
            if !(0.0..18_446_744_073_709_551_616.0).contains(&x) || libm::truncf(x) != x {
                return Err(Error::NonIntegerArgument(x));
            }
            Ok(isqrt(x as u64) as f32)
        }
        v => Ok(float_sqrt(v, x)),
    }
}
