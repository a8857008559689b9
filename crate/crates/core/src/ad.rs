//! Forward-mode differentiation helpers over the 12-d outer state.

use nalgebra::SVector;
use num_dual::{Derivative, DualSVec64};

use crate::mpc::STATE_DIM;

pub type Dual12 = DualSVec64<STATE_DIM>;

/// Lifts a state into dual numbers seeded with the identity.
pub fn seed(x: &SVector<f64, STATE_DIM>) -> SVector<Dual12, STATE_DIM> {
    SVector::from_fn(|i, _| {
        let mut unit = SVector::<f64, STATE_DIM>::zeros();
        unit[i] = 1.0;
        Dual12::new(x[i], Derivative::some(unit))
    })
}

pub fn split(d: &Dual12) -> (f64, SVector<f64, STATE_DIM>) {
    (d.re, d.eps.0.unwrap_or_else(SVector::zeros))
}
