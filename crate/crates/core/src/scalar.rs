//! The floating-point abstraction every numerical routine in the crate is written against.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

use crate::special;

/// A real scalar usable by the kernels, Gaussian-process and quadrature code.
///
/// Implemented for `f32` and `f64`. The error functions are evaluated in double
/// precision and rounded back, so `f32` results are correctly rounded to within
/// an ulp or two.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    fn erf(self) -> Self;
    fn erfc(self) -> Self;
    /// Scaled complementary error function `exp(x²)·erfc(x)`.
    fn erfcx(self) -> Self;

    /// Converts an `f64` literal. Panics only if the target cannot represent
    /// finite `f64` values, which never happens for the provided impls.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::lit(n as f64)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    #[inline]
    fn erf(self) -> Self {
        special::erf(self)
    }
    #[inline]
    fn erfc(self) -> Self {
        special::erfc(self)
    }
    #[inline]
    fn erfcx(self) -> Self {
        special::erfcx(self)
    }
}

impl Real for f32 {
    #[inline]
    fn erf(self) -> Self {
        special::erf(self as f64) as f32
    }
    #[inline]
    fn erfc(self) -> Self {
        special::erfc(self as f64) as f32
    }
    #[inline]
    fn erfcx(self) -> Self {
        special::erfcx(self as f64) as f32
    }
}
