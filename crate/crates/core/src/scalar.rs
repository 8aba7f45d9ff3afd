//! Floating-point abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive};
use rustfft::FftNum;

/// Real scalar the solver can run on: `f32` or `f64`.
///
/// Tolerances quoted throughout the crate are calibrated for `f64`; `f32`
/// runs are supported for quick exploratory work.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + FftNum + Debug + Display + LowerExp + Default
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count or index into this scalar type.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar converts to f64")
    }

    /// Machine epsilon relative to `f64`; used to rescale finite-difference steps.
    #[inline]
    fn eps_ratio() -> f64 {
        Self::epsilon().as_f64() / f64::EPSILON
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub(crate) fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
