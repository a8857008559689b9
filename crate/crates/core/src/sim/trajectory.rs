//! Reference trajectories for the end-effector.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::ConfigError;

/// Shape and timing of the end-effector reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectorySpec {
    /// A fixed point.
    Hover { point: [f64; 3] },
    /// Constant-speed segment from `start` to `end` over `duration`, then
    /// held at `end`.
    Line { start: [f64; 3], end: [f64; 3], duration: f64 },
    /// Horizontal circle, counter-clockwise seen from above.
    Circle { center: [f64; 3], radius: f64, period: f64, phase: f64 },
    /// Circle whose altitude changes at `climb_rate`.
    Helix { center: [f64; 3], radius: f64, period: f64, phase: f64, climb_rate: f64 },
    /// Independent sinusoid on each axis about `center`.
    Lissajous { center: [f64; 3], amplitude: [f64; 3], period: [f64; 3], phase: [f64; 3] },
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        TrajectorySpec::Circle { center: [0.0, 0.0, 1.0], radius: 1.0, period: 60.0, phase: -std::f64::consts::FRAC_PI_2 }
    }
}

/// Reference position and velocity at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
}

fn ring(center: [f64; 3], radius: f64, period: f64, phase: f64, t: f64) -> TrajectoryPoint {
    let w = TAU / period;
    let (s, c) = (w * t + phase).sin_cos();
    TrajectoryPoint {
        position: Vector3::from(center) + Vector3::new(c, s, 0.0) * radius,
        velocity: Vector3::new(-s, c, 0.0) * (radius * w),
        acceleration: Vector3::new(-c, -s, 0.0) * (radius * w * w),
    }
}

impl TrajectorySpec {
    pub fn validate(&self, alpha_max: f64) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError::Invalid(format!("trajectory: {msg}")));
        let peak = match *self {
            TrajectorySpec::Hover { .. } => 0.0,
            TrajectorySpec::Line { duration, .. } => {
                if !(duration > 0.0) {
                    return bad("line duration must be positive");
                }
                0.0
            }
            TrajectorySpec::Circle { radius, period, .. } | TrajectorySpec::Helix { radius, period, .. } => {
                if !(radius >= 0.0 && period > 0.0) {
                    return bad("radius must be nonnegative and period positive");
                }
                radius * (TAU / period).powi(2)
            }
            TrajectorySpec::Lissajous { amplitude, period, .. } => {
                if period.iter().any(|p| !(*p > 0.0)) {
                    return bad("periods must be positive");
                }
                (0..3).map(|k| (amplitude[k] * (TAU / period[k]).powi(2)).powi(2)).sum::<f64>().sqrt()
            }
        };
        if peak > alpha_max / 2.0 {
            return bad(&format!("peak acceleration {peak:.3} m/s² exceeds half of alpha_max ({alpha_max})"));
        }
        Ok(())
    }

    /// Reference at time `t` with its exact derivatives.
    pub fn at(&self, t: f64) -> TrajectoryPoint {
        match *self {
            TrajectorySpec::Hover { point } => TrajectoryPoint { position: point.into(), velocity: Vector3::zeros(), acceleration: Vector3::zeros() },
            TrajectorySpec::Line { start, end, duration } => {
                let (a, b) = (Vector3::from(start), Vector3::from(end));
                let s = (t / duration).clamp(0.0, 1.0);
                let velocity = if (0.0..duration).contains(&t) { (b - a) / duration } else { Vector3::zeros() };
                TrajectoryPoint { position: a + (b - a) * s, velocity, acceleration: Vector3::zeros() }
            }
            TrajectorySpec::Circle { center, radius, period, phase } => ring(center, radius, period, phase, t),
            TrajectorySpec::Helix { center, radius, period, phase, climb_rate } => {
                let mut p = ring(center, radius, period, phase, t);
                p.position.z += climb_rate * t;
                p.velocity.z = climb_rate;
                p
            }
            TrajectorySpec::Lissajous { center, amplitude, period, phase } => {
                let mut out = TrajectoryPoint { position: center.into(), velocity: Vector3::zeros(), acceleration: Vector3::zeros() };
                for k in 0..3 {
                    let w = TAU / period[k];
                    let (s, c) = (w * t + phase[k]).sin_cos();
                    out.position[k] += amplitude[k] * s;
                    out.velocity[k] = amplitude[k] * w * c;
                    out.acceleration[k] = -amplitude[k] * w * w * s;
                }
                out
            }
        }
    }
}

/// Position and velocity of the reference at time `t`.
pub fn generate_trajectory(spec: &TrajectorySpec, t: f64) -> (Vector3<f64>, Vector3<f64>) {
    let p = spec.at(t);
    (p.position, p.velocity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn all_kinds() -> Vec<TrajectorySpec> {
        vec![
            TrajectorySpec::Hover { point: [0.1, 0.2, 0.3] },
            TrajectorySpec::Line { start: [0.0, 0.0, 1.0], end: [3.0, 4.0, 1.0], duration: 50.0 },
            TrajectorySpec::default(),
            TrajectorySpec::Helix { center: [0.0, 0.0, 1.0], radius: 0.5, period: 30.0, phase: 0.3, climb_rate: 0.01 },
            TrajectorySpec::Lissajous { center: [0.0, 0.0, 1.0], amplitude: [1.0, 0.5, 0.2], period: [40.0, 20.0, 30.0], phase: [0.0, 1.0, 2.0] },
        ]
    }

    #[test]
    fn line_starts_at_its_origin_with_constant_velocity() {
        let spec = TrajectorySpec::Line { start: [0.0, 0.0, 1.0], end: [3.0, 4.0, 1.0], duration: 50.0 };
        let (p, v) = generate_trajectory(&spec, 0.0);
        assert_eq!(p, Vector3::new(0.0, 0.0, 1.0));
        assert_relative_eq!(v, Vector3::new(0.06, 0.08, 0.0), epsilon = 1e-15);
        assert_relative_eq!(v.norm(), 5.0 / 50.0, epsilon = 1e-15);
    }

    #[test]
    fn circle_speed_is_constant() {
        let spec = TrajectorySpec::default();
        for k in 0..100 {
            let (_, v) = generate_trajectory(&spec, k as f64 * 1.3);
            assert_relative_eq!(v.norm(), 1.0 * TAU / 60.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn velocity_matches_central_differences() {
        for spec in all_kinds() {
            for k in 0..50 {
                let t = 0.5 + k as f64 * 0.97;
                for h in [1e-2, 5e-3] {
                    let fd = (spec.at(t + h).position - spec.at(t - h).position) / (2.0 * h);
                    let fd_a = (spec.at(t + h).velocity - spec.at(t - h).velocity) / (2.0 * h);
                    // Central differences are second order; the scale bounds
                    // the third derivative of these smooth references.
                    assert!((fd - spec.at(t).velocity).norm() < 1e-2 * h * h, "{spec:?} at {t}");
                    assert!((fd_a - spec.at(t).acceleration).norm() < 1e-2 * h * h, "{spec:?} at {t}");
                }
            }
        }
    }

    #[test]
    fn rejects_aggressive_references() {
        let ok = TrajectorySpec::default();
        assert!(ok.validate(2.0).is_ok());
        let fast = TrajectorySpec::Circle { center: [0.0; 3], radius: 1.0, period: 3.0, phase: 0.0 };
        assert!(fast.validate(2.0).is_err());
    }

    #[test]
    fn toml_round_trip() {
        for spec in all_kinds() {
            let text = toml::to_string(&spec).unwrap();
            assert_eq!(toml::from_str::<TrajectorySpec>(&text).unwrap(), spec);
        }
    }
}
