//! Controller configuration and the safety geometry it acts on.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use super::sqp::SqpOptions;
use super::{INPUT_DIM, STATE_DIM};
use crate::blf::BarrierParams;
use crate::error::ConfigError;
use crate::kinematics::{WallPlane, WorkspaceSphere};

/// Controller variants compared in the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Tracking cost and box bounds only.
    Naive,
    /// Safety as hard constraints on positions.
    Hc,
    /// Safety as soft penalties in the cost.
    Sc,
    /// Safety through barrier invariance constraints.
    Blf,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Naive, Variant::Hc, Variant::Sc, Variant::Blf];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Naive => "naive",
            Variant::Hc => "hc",
            Variant::Sc => "sc",
            Variant::Blf => "blf",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::Naive => "Naive MPC",
            Variant::Hc => "MPC-HC",
            Variant::Sc => "MPC-SC",
            Variant::Blf => "MPC-BLF",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s) || v.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| ConfigError::Invalid(format!("unknown variant '{s}' (expected naive, hc, sc or blf)")))
    }
}

/// Diagonals of the stage (`w*`) and terminal (`ws*`) weight matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub w1: [f64; 3],
    pub ws1: [f64; 3],
    pub w2: [f64; 3],
    pub ws2: [f64; 3],
    pub w3: [f64; 3],
    pub ws3: [f64; 3],
    pub w4: [f64; 3],
    pub ws4: [f64; 3],
    pub w5: [f64; 3],
    pub ws5: [f64; 3],
    /// Quadratic penalty on each input component at every step.
    pub effort: [f64; INPUT_DIM],
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            w1: [10.0; 3],
            ws1: [50.0; 3],
            w2: [2.0; 3],
            ws2: [10.0; 3],
            w3: [1.0; 3],
            ws3: [5.0; 3],
            w4: [5.0; 3],
            ws4: [20.0; 3],
            w5: [5.0; 3],
            ws5: [20.0; 3],
            effort: [0.01, 0.01, 0.01, 0.01, 0.001, 0.001],
        }
    }
}

impl Weights {
    fn pairs(&self) -> [(&'static str, [f64; 3], [f64; 3]); 5] {
        [
            ("w1", self.w1, self.ws1),
            ("w2", self.w2, self.ws2),
            ("w3", self.w3, self.ws3),
            ("w4", self.w4, self.ws4),
            ("w5", self.w5, self.ws5),
        ]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.effort.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(ConfigError::Invalid("effort weights must be finite and nonnegative".into()));
        }
        for (name, stage, terminal) in self.pairs() {
            for k in 0..3 {
                if !(stage[k] >= 0.0 && stage[k].is_finite() && terminal[k].is_finite()) {
                    return Err(ConfigError::Invalid(format!("weight {name} must be finite and nonnegative")));
                }
                if terminal[k] < stage[k] {
                    return Err(ConfigError::Invalid(format!("terminal weight for {name} must not be below the stage weight")));
                }
            }
        }
        Ok(())
    }
}

/// Box limits on inputs and predicted states. Unbounded entries are
/// infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bounds {
    pub u_min: [f64; INPUT_DIM],
    pub u_max: [f64; INPUT_DIM],
    pub x_min: [f64; STATE_DIM],
    pub x_max: [f64; STATE_DIM],
    /// Limit on `|θ1 + θ2|` (rad).
    pub joint_sum_limit: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        use std::f64::consts::PI;
        let inf = f64::INFINITY;
        let v = 2.0;
        let q1 = PI / 3.0;
        Self {
            u_min: [-2.0, -2.0, -2.0, -2.0, -10.0, -10.0],
            u_max: [2.0, 2.0, 2.0, 2.0, 10.0, 10.0],
            x_min: [-inf, -inf, -inf, -v, -v, -v, -inf, -inf, -q1, -inf, -inf, -inf],
            x_max: [inf, inf, inf, v, v, v, inf, inf, q1, inf, inf, inf],
            joint_sum_limit: PI / 2.0,
        }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let ok_u = (0..INPUT_DIM).all(|k| self.u_min[k] <= 0.0 && self.u_max[k] >= 0.0 && self.u_min[k].is_finite() && self.u_max[k].is_finite());
        let ok_x = (0..STATE_DIM).all(|k| self.x_min[k] < self.x_max[k]);
        if ok_u && ok_x && self.joint_sum_limit > 0.0 {
            Ok(())
        } else {
            Err(ConfigError::Invalid("input bounds must be finite and contain zero; state bounds must be ordered".into()))
        }
    }

    pub fn u_min_vec(&self) -> SVector<f64, INPUT_DIM> {
        SVector::from(self.u_min)
    }

    pub fn u_max_vec(&self) -> SVector<f64, INPUT_DIM> {
        SVector::from(self.u_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcConfig {
    /// Horizon length `n` (steps).
    pub horizon: usize,
    /// Sampling time `T` (s).
    pub dt: f64,
    pub weights: Weights,
    pub variant: Variant,
    pub barrier: BarrierParams<f64>,
    pub bounds: Bounds,
    pub solver: SqpOptions,
    /// Margin (m) below which barrier square roots are smoothly extended
    /// inside the optimizer.
    pub barrier_extension: f64,
    /// Floor on the squared denominators of the soft wall cost.
    pub soft_floor: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            horizon: 5,
            dt: 0.1,
            weights: Weights::default(),
            variant: Variant::Blf,
            barrier: BarrierParams { lambda: 5.0, ..BarrierParams::default() },
            bounds: Bounds::default(),
            solver: SqpOptions { regularization: 1e-4, ..SqpOptions::default() },
            barrier_extension: 1e-4,
            soft_floor: 1e-4,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.horizon == 0 {
            return Err(ConfigError::Invalid("horizon must be at least 1".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ConfigError::Invalid(format!("sampling time must be positive, got {}", self.dt)));
        }
        if !(self.barrier_extension > 0.0 && self.soft_floor > 0.0) {
            return Err(ConfigError::Invalid("barrier_extension and soft_floor must be positive".into()));
        }
        self.weights.validate()?;
        self.bounds.validate()?;
        self.barrier.validate()
    }
}

/// Obstacles or workspace the controller must respect.
#[derive(Debug, Clone, PartialEq)]
pub enum SafetyGeometry {
    Free,
    Walls { walls: Vec<WallPlane>, radii: [f64; 3] },
    Workspace(WorkspaceSphere),
}
