//! Inner PID loop: attitude, height and joint tracking of the references
//! produced by the outer controller.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate, wrap_angle, ActuatorInputs, AmParams, PlantState};
use crate::error::{ConfigError, DynamicsError};

/// Gains and clamps of one PID channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Bound on the magnitude of the integral state.
    pub integral_limit: f64,
    /// Bound on the magnitude of the channel output.
    pub output_limit: f64,
}

impl PidGains {
    pub const fn new(kp: f64, ki: f64, kd: f64, integral_limit: f64, output_limit: f64) -> Self {
        Self { kp, ki, kd, integral_limit, output_limit }
    }

    pub fn validate(&self, name: &str) -> Result<(), ConfigError> {
        let gains_ok = [self.kp, self.ki, self.kd].iter().all(|g| *g >= 0.0 && g.is_finite());
        let limits_ok = self.integral_limit > 0.0 && self.output_limit > 0.0;
        if gains_ok && limits_ok {
            Ok(())
        } else {
            Err(ConfigError::Invalid(format!("{name} gains must be nonnegative with positive limits")))
        }
    }
}

/// Gains of every inner channel. Roll and pitch share one set.
///
/// Attitude outputs are body torques (N·m); height and horizontal outputs
/// are acceleration corrections (m/s²); joint outputs are joint
/// accelerations (rad/s²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InnerGains {
    pub attitude: PidGains,
    pub yaw: PidGains,
    pub height: PidGains,
    /// Horizontal tracking of the outer plan, applied through roll and
    /// pitch.
    pub horizontal: PidGains,
    pub joint: PidGains,
}

impl Default for InnerGains {
    /// Output of `tune-pid` on the default airframe.
    fn default() -> Self {
        Self {
            attitude: PidGains::new(67.5, 0.0, 8.1, 0.5, 20.0),
            yaw: PidGains::new(24.0, 0.0, 7.0, 0.5, 10.0),
            height: PidGains::new(16.0, 4.0, 8.0, 0.5, 6.0),
            horizontal: PidGains::new(4.0, 0.0, 4.0, 0.5, 2.0),
            joint: PidGains::new(100.0, 0.0, 20.0, 0.5, 30.0),
        }
    }
}

impl InnerGains {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.attitude.validate("attitude")?;
        self.yaw.validate("yaw")?;
        self.height.validate("height")?;
        self.horizontal.validate("horizontal")?;
        self.joint.validate("joint")
    }
}

/// Setpoints held by the inner loop between outer updates.
///
/// The attitude, thrust and joint targets come from the outer acceleration
/// command. The remaining fields carry the outer plan's rates and
/// feedforward terms; left at their defaults they disable height tracking
/// and rate feedforward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerRefs {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    /// Collective thrust for level flight (N).
    pub thrust: f64,
    pub joints: Vector2<f64>,
    pub yaw_rate: f64,
    /// Altitude target; `None` leaves the height channel idle.
    pub height: Option<f64>,
    pub climb_rate: f64,
    /// Horizontal position target (inertial x, y); `None` leaves the
    /// horizontal channel idle.
    pub horizontal: Option<Vector2<f64>>,
    pub horizontal_rate: Vector2<f64>,
    pub joint_rates: Vector2<f64>,
    pub joint_accel: Vector2<f64>,
}

impl InnerRefs {
    /// Level hover at the current joint angles.
    pub fn hover(params: &AmParams<f64>, yaw: f64, joints: Vector2<f64>) -> Self {
        acceleration_to_attitude(&Vector3::zeros(), yaw, params).with_joints(joints)
    }

    pub fn with_joints(mut self, joints: Vector2<f64>) -> Self {
        self.joints = joints;
        self
    }
}

/// Small-angle inversion of a desired inertial acceleration into roll, pitch
/// and collective thrust, with roll and pitch clamped to the attitude limit.
pub fn acceleration_to_attitude(accel: &Vector3<f64>, yaw: f64, params: &AmParams<f64>) -> InnerRefs {
    let g = params.gravity;
    let lim = params.attitude_limit;
    let (s, c) = yaw.sin_cos();
    InnerRefs {
        roll: ((accel.x * s - accel.y * c) / g).clamp(-lim, lim),
        pitch: ((accel.x * c + accel.y * s) / g).clamp(-lim, lim),
        yaw,
        thrust: params.total_mass() * (g + accel.z),
        joints: Vector2::zeros(),
        yaw_rate: 0.0,
        height: None,
        climb_rate: 0.0,
        horizontal: None,
        horizontal_rate: Vector2::zeros(),
        joint_rates: Vector2::zeros(),
        joint_accel: Vector2::zeros(),
    }
}

/// Commands for one plant step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerCommand {
    pub thrust: f64,
    pub torque: Vector3<f64>,
    pub joint_accel: Vector2<f64>,
}

impl InnerCommand {
    pub fn actuators(&self, disturbance: Vector3<f64>) -> ActuatorInputs<f64> {
        ActuatorInputs { thrust: self.thrust, torque: self.torque, joint_accel: self.joint_accel, disturbance }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Channel {
    integral: f64,
}

impl Channel {
    /// PID with derivative on the supplied rate error and a conditionally
    /// integrated, clamped integral state.
    fn update(&mut self, g: &PidGains, error: f64, rate_error: f64, dt: f64) -> f64 {
        let candidate = (self.integral + error * dt).clamp(-g.integral_limit, g.integral_limit);
        let unclamped = g.kp * error + g.ki * candidate + g.kd * rate_error;
        // Freeze the integral while saturated in the direction of the error.
        if unclamped.abs() <= g.output_limit || unclamped.signum() != error.signum() {
            self.integral = candidate;
        }
        (g.kp * error + g.ki * self.integral + g.kd * rate_error).clamp(-g.output_limit, g.output_limit)
    }
}

/// Stateful inner controller, one per episode.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerController {
    gains: InnerGains,
    attitude: [Channel; 3],
    height: Channel,
    horizontal: [Channel; 2],
    joints: [Channel; 2],
}

impl InnerController {
    pub fn new(gains: InnerGains) -> Self {
        Self { gains, attitude: Default::default(), height: Channel::default(), horizontal: Default::default(), joints: Default::default() }
    }

    pub fn gains(&self) -> &InnerGains {
        &self.gains
    }

    pub fn reset(&mut self) {
        *self = Self::new(self.gains);
    }

    /// Current integral states: roll, pitch, yaw, height, joint 1, joint 2.
    pub fn integrals(&self) -> [f64; 6] {
        [
            self.attitude[0].integral,
            self.attitude[1].integral,
            self.attitude[2].integral,
            self.height.integral,
            self.joints[0].integral,
            self.joints[1].integral,
        ]
    }

    pub fn step(&mut self, s: &PlantState<f64>, refs: &InnerRefs, params: &AmParams<f64>, dt: f64) -> InnerCommand {
        let g = &self.gains;
        let (mut roll, mut pitch) = (refs.roll, refs.pitch);
        if let Some(target) = refs.horizontal {
            let mut accel = Vector3::zeros();
            for k in 0..2 {
                accel[k] = self.horizontal[k].update(&g.horizontal, target[k] - s.position[k], refs.horizontal_rate[k] - s.velocity[k], dt);
            }
            let tilt = acceleration_to_attitude(&accel, refs.yaw, params);
            let lim = params.attitude_limit;
            roll = (roll + tilt.roll).clamp(-lim, lim);
            pitch = (pitch + tilt.pitch).clamp(-lim, lim);
        }
        let targets = [roll, pitch, refs.yaw];
        let rate_targets = [0.0, 0.0, refs.yaw_rate];
        let mut torque = Vector3::zeros();
        for k in 0..3 {
            let gains = if k == 2 { &g.yaw } else { &g.attitude };
            let error = wrap_angle(targets[k] - s.euler[k]);
            torque[k] = self.attitude[k].update(gains, error, rate_targets[k] - s.body_rate[k], dt);
        }

        let correction = match refs.height {
            Some(z) => self.height.update(&g.height, z - s.position.z, refs.climb_rate - s.velocity.z, dt),
            None => 0.0,
        };
        let tilt = (s.euler[0].cos() * s.euler[1].cos()).max(0.5);
        let thrust = ((refs.thrust + params.total_mass() * correction) / tilt).max(0.0);
        // Cancel the moment of the arm's apparent weight about the body
        // origin. Under thrust-driven flight the apparent gravity points
        // along body -z with magnitude thrust / m_am.
        let load = Vector3::new(0.0, 0.0, -params.arm_mass() * thrust / params.total_mass());
        torque -= params.arm_com_body(&s.joints).cross(&load);

        let mut joint_accel = refs.joint_accel;
        for k in 0..2 {
            let error = refs.joints[k] - s.joints[k];
            let rate_error = refs.joint_rates[k] - s.joint_rates[k];
            joint_accel[k] = (joint_accel[k] + self.joints[k].update(&g.joint, error, rate_error, dt)).clamp(-g.joint.output_limit, g.joint.output_limit);
        }
        InnerCommand { thrust, torque, joint_accel }
    }
}

/// Shape of a closed-loop step response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResponse {
    /// Last time the response left the 2 % band (s).
    pub settling_time: f64,
    /// Peak overshoot as a fraction of the step.
    pub overshoot: f64,
    /// Largest attitude error at the end of the run (rad).
    pub final_error: f64,
}

/// Simulates a roll step of `amplitude` from level hover on the nonlinear
/// plant and measures its settling time and overshoot.
pub fn roll_step_response(params: &AmParams<f64>, gains: &InnerGains, amplitude: f64, duration: f64, dt: f64) -> Result<StepResponse, DynamicsError> {
    let mut s = PlantState::at_rest(Vector3::new(0.0, 0.0, 1.0), Vector2::zeros());
    let mut ctl = InnerController::new(*gains);
    let mut refs = InnerRefs::hover(params, 0.0, Vector2::zeros());
    refs.roll = amplitude;
    refs.height = Some(1.0);
    let band = 0.02 * amplitude.abs();
    let mut settling_time = 0.0;
    let mut peak: f64 = 0.0;
    let steps = (duration / dt).round() as usize;
    for k in 0..steps {
        let cmd = ctl.step(&s, &refs, params, dt);
        s = integrate(params, &s, &cmd.actuators(Vector3::zeros()), dt)?.state;
        let t = (k + 1) as f64 * dt;
        peak = peak.max((s.euler[0] - amplitude) * amplitude.signum());
        if (s.euler[0] - amplitude).abs() > band {
            settling_time = t;
        }
    }
    let final_error = (s.euler - Vector3::new(amplitude, 0.0, 0.0)).amax();
    Ok(StepResponse { settling_time, overshoot: peak / amplitude.abs(), final_error })
}

/// Candidate attitude gains scored by [`tune_attitude`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneCandidate {
    pub kp: f64,
    pub kd: f64,
    pub response: StepResponse,
}

/// Grid search over attitude `kp` and `kd`, keeping every other gain fixed.
///
/// Returns all candidates sorted so the first has the shortest settling time
/// among those with at most 20 % overshoot, ties broken by smaller `kp`.
pub fn tune_attitude(params: &AmParams<f64>, base: &InnerGains, kps: &[f64], kds: &[f64]) -> Vec<TuneCandidate> {
    let mut out: Vec<TuneCandidate> = kps
        .iter()
        .flat_map(|&kp| kds.iter().map(move |&kd| (kp, kd)))
        .filter_map(|(kp, kd)| {
            let gains = InnerGains { attitude: PidGains { kp, kd, ..base.attitude }, ..*base };
            roll_step_response(params, &gains, 0.1, 2.0, 0.01).ok().map(|response| TuneCandidate { kp, kd, response })
        })
        .collect();
    let key = |c: &TuneCandidate| (c.response.overshoot > 0.2, c.response.settling_time, c.kp);
    out.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal));
    out
}
