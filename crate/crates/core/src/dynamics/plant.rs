//! Coupled UAV + arm equations of motion and their fixed-step integration.

use nalgebra::{Matrix6, Vector2, Vector3, Vector6};

use super::{base_reaction, euler_rates, AmParams, BaseMotion, PlantState, Wrench, WrenchFrame};
use crate::error::DynamicsError;
use crate::scalar::{c, Real};

/// Largest step the plant accepts (s).
pub const MAX_STEP: f64 = 0.01;

/// Actuator commands held constant over one integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorInputs<T: Real> {
    /// Collective thrust along body z (N).
    pub thrust: T,
    /// Body torque (N·m).
    pub torque: Vector3<T>,
    /// Commanded joint accelerations (rad/s²).
    pub joint_accel: Vector2<T>,
    /// Additive inertial acceleration on the UAV (m/s²).
    pub disturbance: Vector3<T>,
}

impl<T: Real> ActuatorInputs<T> {
    pub fn hover(params: &AmParams<T>) -> Self {
        Self {
            thrust: params.total_mass() * params.gravity,
            torque: Vector3::zeros(),
            joint_accel: Vector2::zeros(),
            disturbance: Vector3::zeros(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantAccel<T: Real> {
    /// Inertial linear acceleration of the body origin.
    pub linear: Vector3<T>,
    /// Body-frame angular acceleration.
    pub angular: Vector3<T>,
}

/// Solves the block-diagonal combined-body equations
///
/// ```text
/// m_am · a   = m_am · g + R (T_B + f_0) + m_am · d
/// I_am · ω̇  = τ_B + τ_0 − ω × I_am ω
/// ```
///
/// `reaction.force` is the arm's reaction on the base with the arm's static
/// weight removed (that weight is already inside `m_am · g`); `reaction.torque`
/// is the full reaction torque about the body origin, gravity moment included.
/// Both are in the body frame. The disturbance is an acceleration and is added
/// to the result unchanged.
pub fn am_acceleration<T: Real>(
    params: &AmParams<T>,
    s: &PlantState<T>,
    thrust: &Vector3<T>,
    torque: &Vector3<T>,
    reaction: &Wrench<T>,
    disturbance: &Vector3<T>,
) -> PlantAccel<T> {
    let rot = s.rotation();
    let mass = params.total_mass();
    let gravity = Vector3::new(T::zero(), T::zero(), -params.gravity);
    let linear = gravity + rot * (thrust + reaction.force) / mass + disturbance;

    let inertia = params.total_inertia(&s.joints);
    let w = s.body_rate;
    let rhs = torque + reaction.torque - w.cross(&(inertia * w));
    let angular = inertia.lu().solve(&rhs).unwrap_or_else(Vector3::zeros);
    PlantAccel { linear, angular }
}

/// Exact floating-base accelerations for the given inputs.
///
/// The arm reaction depends affinely on the base accelerations, so the
/// recursion is probed once for the bias and once per base-acceleration axis,
/// and the resulting 6×6 system is solved directly. The solution is then
/// routed through [`am_acceleration`] with the equivalent combined-body
/// reaction, which reproduces it exactly.
pub fn coupled_acceleration<T: Real>(
    params: &AmParams<T>,
    s: &PlantState<T>,
    inputs: &ActuatorInputs<T>,
) -> PlantAccel<T> {
    let rot = s.rotation();
    let gravity_body = rot.transpose() * Vector3::new(T::zero(), T::zero(), -params.gravity);
    let w = s.body_rate;
    let zero2 = Vector2::zeros();

    let bias_motion = BaseMotion { omega: w, omega_dot: Vector3::zeros(), linear_accel: Vector3::zeros() };
    let bias = base_reaction(params, &bias_motion, &s.joints, &s.joint_rates, &inputs.joint_accel, &gravity_body);

    // Columns of d(reaction)/d(a_b, ω̇); independent of rates and gravity.
    let mut sensitivity = Matrix6::<T>::zeros();
    for k in 0..6 {
        let mut unit = Vector3::zeros();
        unit[k % 3] = T::one();
        let motion = if k < 3 {
            BaseMotion { omega: Vector3::zeros(), omega_dot: Vector3::zeros(), linear_accel: unit }
        } else {
            BaseMotion { omega: Vector3::zeros(), omega_dot: unit, linear_accel: Vector3::zeros() }
        };
        let col = base_reaction(params, &motion, &s.joints, &zero2, &zero2, &Vector3::zeros());
        sensitivity.fixed_view_mut::<3, 1>(0, k).copy_from(&col.force);
        sensitivity.fixed_view_mut::<3, 1>(3, k).copy_from(&col.torque);
    }

    let mut lhs = -sensitivity;
    for i in 0..3 {
        lhs[(i, i)] += params.uav_mass;
    }
    let inertia_block = lhs.fixed_view::<3, 3>(3, 3) + params.uav_inertia;
    lhs.fixed_view_mut::<3, 3>(3, 3).copy_from(&inertia_block);

    let thrust = Vector3::new(T::zero(), T::zero(), inputs.thrust);
    let lin_rhs = gravity_body * params.uav_mass + thrust + bias.force;
    let ang_rhs = inputs.torque + bias.torque - w.cross(&(params.uav_inertia * w));
    let rhs = Vector6::new(lin_rhs[0], lin_rhs[1], lin_rhs[2], ang_rhs[0], ang_rhs[1], ang_rhs[2]);
    let sol = lhs.lu().solve(&rhs).unwrap_or_else(Vector6::zeros);
    let accel_body = Vector3::new(sol[0], sol[1], sol[2]);
    let omega_dot = Vector3::new(sol[3], sol[4], sol[5]);

    // Reaction at the solution, converted to the combined-body convention.
    let exact = sensitivity * sol;
    let force = bias.force + Vector3::new(exact[0], exact[1], exact[2]);
    let torque = bias.torque + Vector3::new(exact[3], exact[4], exact[5]);
    let arm_mass = params.arm_mass();
    let arm_inertia = params.arm_inertia(&s.joints);
    let reaction = Wrench {
        force: force + (accel_body - gravity_body) * arm_mass,
        torque: torque + arm_inertia * omega_dot + w.cross(&(arm_inertia * w)),
        frame: WrenchFrame::Body,
    };
    am_acceleration(params, s, &thrust, &inputs.torque, &reaction, &inputs.disturbance)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome<T: Real> {
    pub state: PlantState<T>,
    /// True when a joint hit its limit during the step and was clamped.
    pub joint_limited: bool,
}

#[derive(Clone, Copy)]
struct Deriv<T: Real> {
    velocity: Vector3<T>,
    accel: Vector3<T>,
    euler_rate: Vector3<T>,
    omega_dot: Vector3<T>,
    joint_rates: Vector2<T>,
    joint_accel: Vector2<T>,
}

fn derivative<T: Real>(
    params: &AmParams<T>,
    s: &PlantState<T>,
    inputs: &ActuatorInputs<T>,
) -> Result<Deriv<T>, DynamicsError> {
    let euler_rate = euler_rates(&s.euler, &s.body_rate)?;
    let acc = coupled_acceleration(params, s, inputs);
    Ok(Deriv {
        velocity: s.velocity,
        accel: acc.linear,
        euler_rate,
        omega_dot: acc.angular,
        joint_rates: s.joint_rates,
        joint_accel: inputs.joint_accel,
    })
}

fn advance<T: Real>(s: &PlantState<T>, d: &Deriv<T>, h: T) -> PlantState<T> {
    PlantState {
        position: s.position + d.velocity * h,
        velocity: s.velocity + d.accel * h,
        euler: s.euler + d.euler_rate * h,
        body_rate: s.body_rate + d.omega_dot * h,
        joints: s.joints + d.joint_rates * h,
        joint_rates: s.joint_rates + d.joint_accel * h,
    }
}

/// Advances the plant by one classical RK4 step of length `dt`.
pub fn integrate<T: Real>(
    params: &AmParams<T>,
    s: &PlantState<T>,
    inputs: &ActuatorInputs<T>,
    dt: T,
) -> Result<StepOutcome<T>, DynamicsError> {
    let max: T = c(MAX_STEP * (1.0 + 1e-12));
    if !(dt > T::zero() && dt <= max) {
        return Err(DynamicsError::InvalidStep {
            dt: nalgebra::try_convert(dt).unwrap_or(f64::NAN),
            max: MAX_STEP,
        });
    }
    let half: T = c(0.5);
    let k1 = derivative(params, s, inputs)?;
    let k2 = derivative(params, &advance(s, &k1, dt * half), inputs)?;
    let k3 = derivative(params, &advance(s, &k2, dt * half), inputs)?;
    let k4 = derivative(params, &advance(s, &k3, dt), inputs)?;

    let sixth = dt / c(6.0);
    let two: T = c(2.0);
    let combine = |f: fn(&Deriv<T>) -> Vector3<T>| (f(&k1) + f(&k2) * two + f(&k3) * two + f(&k4)) * sixth;
    let combine2 = |f: fn(&Deriv<T>) -> Vector2<T>| (f(&k1) + f(&k2) * two + f(&k3) * two + f(&k4)) * sixth;

    let mut next = PlantState {
        position: s.position + combine(|d| d.velocity),
        velocity: s.velocity + combine(|d| d.accel),
        euler: s.euler + combine(|d| d.euler_rate),
        body_rate: s.body_rate + combine(|d| d.omega_dot),
        joints: s.joints + combine2(|d| d.joint_rates),
        joint_rates: s.joint_rates + combine2(|d| d.joint_accel),
    };
    if next.euler[0].abs() >= T::frac_pi_2() || next.euler[1].abs() >= T::frac_pi_2() {
        return Err(DynamicsError::SingularAttitude);
    }
    next.euler[2] = wrap_angle(next.euler[2]);
    let joint_limited = clamp_joints(params, &mut next);
    Ok(StepOutcome { state: next, joint_limited })
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::two_pi();
    let mut w = a % two_pi;
    if w > T::pi() {
        w -= two_pi;
    } else if w <= -T::pi() {
        w += two_pi;
    }
    w
}

fn clamp_joints<T: Real>(params: &AmParams<T>, s: &mut PlantState<T>) -> bool {
    let mut limited = false;
    let lim1 = params.joint_limits[0];
    if s.joints[0].abs() > lim1 {
        let sign = s.joints[0].signum();
        s.joints[0] = lim1 * sign;
        if s.joint_rates[0] * sign > T::zero() {
            s.joint_rates[0] = T::zero();
        }
        limited = true;
    }
    let lim2 = params.joint_limits[1];
    let sum = s.joints[0] + s.joints[1];
    if sum.abs() > lim2 {
        let sign = sum.signum();
        s.joints[1] = lim2 * sign - s.joints[0];
        let rate_sum = s.joint_rates[0] + s.joint_rates[1];
        if rate_sum * sign > T::zero() {
            s.joint_rates[1] = -s.joint_rates[0];
        }
        limited = true;
    }
    limited
}
