//! Scalar abstraction shared by the component-level model kernels.
//!
//! Loss curves, limiters, swing equations and the controller blocks are
//! written once against [`Scalar`] and instantiated for `f32` (embedded
//! controller targets) and `f64` (everything assembled at system level).

use std::fmt::{Debug, Display};

/// Real floating point scalar: `f32` or `f64`.
pub trait Scalar:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("finite literal")
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn two() -> Self {
        Self::lit(2.0)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Clamps `value` into `[-limit, limit]`.
#[inline]
pub fn clamp_sym<T: Scalar>(value: T, limit: T) -> T {
    value.max(-limit).min(limit)
}

/// Wraps an angle difference into `(-pi, pi]`.
#[inline]
pub fn wrap_angle<T: Scalar>(angle: T) -> T {
    let two_pi = T::TAU();
    let mut a = angle % two_pi;
    if a > T::PI() {
        a -= two_pi;
    } else if a <= -T::PI() {
        a += two_pi;
    }
    a
}
