//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the solvers are generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

#[inline]
pub fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Gamma function, evaluated in double precision.
pub fn gamma<T: Real>(x: T) -> T {
    lit(statrs::function::gamma::gamma(to_f64(x)))
}

/// `x^e` through `exp(e ln x)` with an exact short-circuit for `e = 0`.
#[inline]
pub fn pow<T: Real>(x: T, e: T) -> T {
    if e == T::zero() {
        T::one()
    } else if e == T::one() {
        x
    } else {
        (e * x.ln()).exp()
    }
}
