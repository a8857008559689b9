//! Bounded random acceleration disturbances.

use nalgebra::Vector3;
use rand::Rng;

/// Draws each component independently and uniformly from `[-d_m, d_m]`.
pub fn sample_disturbance<R: Rng + ?Sized>(rng: &mut R, d_m: f64) -> Vector3<f64> {
    if d_m == 0.0 {
        return Vector3::zeros();
    }
    Vector3::from_fn(|_, _| rng.gen_range(-d_m..=d_m))
}
