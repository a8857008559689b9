//! File configuration and the runtime scenario built from it.

use std::path::Path;
use std::str::FromStr;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::trajectory::TrajectorySpec;
use crate::dynamics::{AmParams, PlantState, MAX_STEP};
use crate::error::ConfigError;
use crate::inner_loop::InnerGains;
use crate::kinematics::{critical_points, workspace_deviation, WallPlane, WorkspaceSphere};
use crate::mpc::{MpcConfig, SafetyGeometry, Variant};

/// The two evaluation settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// Case I: walls around the reference.
    WallAvoidance,
    /// Case II: the UAV must stay inside a sphere attached to the reference.
    WorkspaceBound,
}

impl Case {
    pub const ALL: [Case; 2] = [Case::WallAvoidance, Case::WorkspaceBound];

    pub fn name(self) -> &'static str {
        match self {
            Case::WallAvoidance => "walls",
            Case::WorkspaceBound => "workspace",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Case::WallAvoidance => "Case I",
            Case::WorkspaceBound => "Case II",
        }
    }
}

impl FromStr for Case {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "i" | "walls" | "wall_avoidance" => Ok(Case::WallAvoidance),
            "2" | "ii" | "workspace" | "workspace_bound" => Ok(Case::WorkspaceBound),
            _ => Err(ConfigError::Invalid(format!("unknown case '{s}' (expected walls or workspace)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub case: Case,
    /// Episode length (s).
    pub duration: f64,
    /// Outer-loop period (s).
    pub t_s: f64,
    /// Inner-loop and plant step (s).
    pub inner_dt: f64,
    /// Disturbance amplitude `d_m` (m/s²) used when `disturbed` is set.
    pub disturbance: f64,
    pub disturbed: bool,
    /// Physical size (m/s) of one unit of the barrier tightening `λ`.
    /// `mpc.barrier.lambda` is given in these units.
    pub lambda_unit: f64,
    /// Initial UAV offset from its nominal start (m).
    pub initial_offset: [f64; 3],
    /// End the episode at the first infeasible solve instead of applying
    /// the least-violating input and continuing.
    pub stop_on_infeasible: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            case: Case::WorkspaceBound,
            duration: 120.0,
            t_s: 0.1,
            inner_dt: 0.01,
            disturbance: 0.8,
            disturbed: true,
            lambda_unit: 0.1,
            initial_offset: [0.0; 3],
            stop_on_infeasible: true,
        }
    }
}

/// Case I wall placement. Without explicit `planes`, three vertical walls
/// box the reference's horizontal extent on the −x, +x and +y sides at
/// `clearance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WallLayout {
    pub clearance: f64,
    pub s_min: f64,
    /// Safety radii of base, joint 2 and end-effector (m).
    pub radii: [f64; 3],
    pub planes: Option<Vec<WallPlane>>,
}

impl Default for WallLayout {
    fn default() -> Self {
        Self { clearance: 0.2, s_min: 0.1, radii: [0.1; 3], planes: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub scenario: ScenarioConfig,
    pub trajectory: TrajectorySpec,
    pub walls: WallLayout,
    pub workspace: WorkspaceSphere,
    pub mpc: MpcConfig,
    pub params: AmParams<f64>,
    pub gains: InnerGains,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: SimConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("configuration is always serializable")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scenario()?;
        Ok(())
    }

    /// Builds the runtime scenario for the configured case and variant.
    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let sc = &self.scenario;
        self.params.validate()?;
        self.gains.validate()?;
        self.mpc.validate()?;
        self.trajectory.validate(self.params.alpha_max)?;
        for (name, v) in [("duration", sc.duration), ("t_s", sc.t_s), ("inner_dt", sc.inner_dt)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::Invalid(format!("scenario.{name} must be positive, got {v}")));
            }
        }
        if !(sc.disturbance >= 0.0 && sc.lambda_unit > 0.0) {
            return Err(ConfigError::Invalid("disturbance must be nonnegative and lambda_unit positive".into()));
        }
        let steps = whole_ratio(sc.duration, sc.t_s, "duration / t_s")?;
        let inner_steps = whole_ratio(sc.t_s, sc.inner_dt, "t_s / inner_dt")?;
        if sc.inner_dt > MAX_STEP {
            return Err(ConfigError::Invalid(format!("inner_dt must not exceed {MAX_STEP} s")));
        }

        let p0 = self.trajectory.at(0.0).position;
        let reach = self.params.reach();
        let (geometry, mut initial) = match sc.case {
            Case::WallAvoidance => {
                let walls = match &self.walls.planes {
                    Some(planes) if !planes.is_empty() => planes.clone(),
                    Some(_) => return Err(ConfigError::Invalid("Case I needs at least one wall".into())),
                    None => self.boxing_walls(steps, sc.t_s)?,
                };
                if self.walls.radii.iter().any(|r| !(*r >= 0.0)) {
                    return Err(ConfigError::Invalid("safety radii must be nonnegative".into()));
                }
                let start = PlantState::at_rest(p0 + Vector3::z() * reach, Vector2::zeros());
                (SafetyGeometry::Walls { walls, radii: self.walls.radii }, start)
            }
            Case::WorkspaceBound => {
                self.workspace.validate(&self.params)?;
                // Bend the arm so its tip hangs |d_iw| below the base.
                let beta = (self.workspace.center_offset.norm() / reach).clamp(-1.0, 1.0).acos();
                let start = PlantState::at_rest(self.workspace.center(&p0), Vector2::new(-beta, 2.0 * beta));
                (SafetyGeometry::Workspace(self.workspace), start)
            }
        };
        initial.position += Vector3::from(sc.initial_offset);

        let mut mpc = self.mpc.clone();
        mpc.barrier.lambda *= sc.lambda_unit;
        let scenario = Scenario {
            case: sc.case,
            geometry,
            trajectory: self.trajectory,
            d_m: if sc.disturbed { sc.disturbance } else { 0.0 },
            steps,
            inner_steps,
            t_s: sc.t_s,
            inner_dt: sc.inner_dt,
            mpc,
            params: self.params.clone(),
            gains: self.gains,
            initial,
            stop_on_infeasible: sc.stop_on_infeasible,
        };
        scenario.check_initial_state()?;
        Ok(scenario)
    }

    fn boxing_walls(&self, steps: usize, t_s: f64) -> Result<Vec<WallPlane>, ConfigError> {
        let (mut lo, mut hi) = (Vector3::repeat(f64::INFINITY), Vector3::repeat(f64::NEG_INFINITY));
        for k in 0..=steps {
            let p = self.trajectory.at(k as f64 * t_s).position;
            lo = lo.inf(&p);
            hi = hi.sup(&p);
        }
        let c = self.walls.clearance;
        let s_min = self.walls.s_min;
        Ok(vec![
            WallPlane::new(Vector3::x(), -(lo.x - c), s_min)?,
            WallPlane::new(-Vector3::x(), hi.x + c, s_min)?,
            WallPlane::new(-Vector3::y(), hi.y + c, s_min)?,
        ])
    }
}

fn whole_ratio(a: f64, b: f64, what: &str) -> Result<usize, ConfigError> {
    let r = a / b;
    if (r - r.round()).abs() > 1e-9 * r.max(1.0) || r.round() < 1.0 {
        return Err(ConfigError::Invalid(format!("{what} must be a positive whole number, got {r}")));
    }
    Ok(r.round() as usize)
}

/// Everything an episode needs, with derived quantities resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub case: Case,
    pub geometry: SafetyGeometry,
    pub trajectory: TrajectorySpec,
    /// Disturbance amplitude; zero disables it.
    pub d_m: f64,
    pub steps: usize,
    pub inner_steps: usize,
    pub t_s: f64,
    pub inner_dt: f64,
    /// Controller settings with `λ` already in physical units.
    pub mpc: MpcConfig,
    pub params: AmParams<f64>,
    pub gains: InnerGains,
    pub initial: PlantState<f64>,
    pub stop_on_infeasible: bool,
}

impl Scenario {
    pub fn variant(&self) -> Variant {
        self.mpc.variant
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.mpc.variant = variant;
        self
    }

    fn check_initial_state(&self) -> Result<(), ConfigError> {
        let p_d = self.trajectory.at(0.0).position;
        match &self.geometry {
            SafetyGeometry::Walls { walls, radii } => {
                let points = critical_points(&self.initial, &self.params, *radii);
                for wall in walls {
                    for (p, r) in points.iter().zip(radii) {
                        if wall.signed_distance(&p.position) <= wall.s_min().max(*r) {
                            return Err(ConfigError::Invalid(format!("initial {} point violates a wall margin", p.id.name())));
                        }
                    }
                }
            }
            SafetyGeometry::Workspace(sphere) => {
                let d = workspace_deviation(&self.initial, &p_d, sphere).norm();
                if d >= sphere.radius {
                    return Err(ConfigError::Invalid(format!("initial UAV position is {d:.3} m from the workspace center (radius {})", sphere.radius)));
                }
            }
            SafetyGeometry::Free => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = SimConfig::default();
        let back = SimConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_files_fill_defaults() {
        let cfg = SimConfig::from_toml_str("[scenario]\ncase = \"wall_avoidance\"\n[mpc]\nhorizon = 3\n").unwrap();
        assert_eq!(cfg.scenario.case, Case::WallAvoidance);
        assert_eq!(cfg.mpc.horizon, 3);
        assert_eq!(cfg.mpc.weights, crate::mpc::Weights::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(SimConfig::from_toml_str("[scenario]\nbogus = 1\n"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn inconsistent_timing_is_rejected() {
        let mut cfg = SimConfig::default();
        cfg.scenario.t_s = 0.07;
        assert!(cfg.scenario().is_err());
        cfg.scenario.t_s = 0.1;
        cfg.scenario.inner_dt = 0.02;
        assert!(cfg.scenario().is_err());
    }

    #[test]
    fn default_walls_box_the_circle() {
        let mut cfg = SimConfig::default();
        cfg.scenario.case = Case::WallAvoidance;
        let sc = cfg.scenario().unwrap();
        let SafetyGeometry::Walls { walls, .. } = &sc.geometry else { panic!("expected walls") };
        assert_eq!(walls.len(), 3);
        for w in walls {
            let closest = (0..1200).map(|k| w.signed_distance(&cfg.trajectory.at(k as f64 * 0.1).position)).fold(f64::INFINITY, f64::min);
            approx::assert_relative_eq!(closest, cfg.walls.clearance, epsilon = 1e-6);
        }
    }

    #[test]
    fn unsafe_start_is_rejected() {
        let mut cfg = SimConfig::default();
        cfg.scenario.initial_offset = [0.0, 0.0, 0.1];
        assert!(cfg.scenario().is_err());
        cfg.scenario.case = Case::WallAvoidance;
        cfg.scenario.initial_offset = [1.45, 0.0, -0.1];
        assert!(cfg.scenario().is_err());
    }

    #[test]
    fn case_names_parse() {
        assert_eq!("2".parse::<Case>().unwrap(), Case::WorkspaceBound);
        assert_eq!("walls".parse::<Case>().unwrap(), Case::WallAvoidance);
        assert!("3".parse::<Case>().is_err());
    }
}
