//! Scalar abstraction shared by the numerical modules.
//!
//! Everything below `sim` is written against [`Real`] so the geometry, link
//! budget and control laws can be evaluated in `f32` or `f64`. The simulator
//! itself runs in `f64`; see the aliases at the crate root.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumCast};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn lit(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).expect("f64 constant representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        <f64 as NumCast>::from(self).unwrap_or(f64::NAN)
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for [`Real::lit`].
#[inline]
pub(crate) fn lit<S: Real>(value: f64) -> S {
    S::lit(value)
}

/// Clamps `value` into `[lo, hi]`.
#[inline]
pub(crate) fn clamp<S: Real>(value: S, lo: S, hi: S) -> S {
    value.max(lo).min(hi)
}
