//! Scalar abstraction shared by the dynamics, kinematics, barrier and
//! prediction code.
//!
//! Everything numerical in those modules is written against [`Real`], so the
//! same routines run on `f32`, `f64` and on forward-mode dual numbers (which is
//! how the optimizer obtains exact stage gradients).

use nalgebra::RealField;
use num_traits::FromPrimitive;

/// Real scalar: `f32`, `f64`, or a dual number over either.
pub trait Real: RealField + Copy + FromPrimitive {}

impl<T: RealField + Copy + FromPrimitive> Real for T {}

/// Lifts an `f64` constant into `T`.
#[inline]
pub fn c<T: Real>(value: f64) -> T {
    nalgebra::convert(value)
}

/// Sign-preserving power `sign(x)·|x|^p`.
#[inline]
pub fn signed_pow<T: Real>(x: T, p: T) -> T {
    if p == T::one() {
        return x;
    }
    if x >= T::zero() {
        x.powf(p)
    } else {
        -(-x).powf(p)
    }
}
