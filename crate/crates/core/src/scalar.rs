//! Floating-point scalar abstraction: every numeric kernel in this crate is
//! generic over [`Scalar`], implemented for `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point: f32 or f64.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Default
    + Display
    + Debug
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + Sum
        + Default
        + Display
        + Debug
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
#[inline]
pub fn real<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant representable in scalar type")
}

/// Converts a count into the working scalar type.
#[inline]
pub fn real_from_usize<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("usize representable in scalar type")
}
