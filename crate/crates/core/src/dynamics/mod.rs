//! Full nonlinear plant of the aerial manipulator: a quadrotor body with a
//! planar two-link arm hanging from its center.
//!
//! Frames: the inertial frame is z-up with gravity `-g_z` along z. The body
//! frame follows the ZYX (yaw, pitch, roll) Euler convention. The arm moves in
//! the body x-z plane; joint 1 sits at the body origin and both joint axes are
//! along body `-y`, so positive joint angles swing the arm from hanging
//! straight down (`Θ = 0`) towards body `+x`.

mod plant;
mod recursion;

pub use plant::{
    am_acceleration, coupled_acceleration, integrate, wrap_angle, ActuatorInputs, MAX_STEP, PlantAccel, StepOutcome,
};
pub use recursion::{backward_recursion, base_reaction, forward_recursion, joint_torques, BaseMotion};

use nalgebra::{Matrix3, Rotation3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, DynamicsError};
use crate::scalar::{c, Real};

pub const NUM_LINKS: usize = 2;

/// Physical constants of the aerial manipulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>, AmParams<T>: Default"))]
pub struct AmParams<T: Real> {
    /// UAV-only mass `m_B` (kg).
    pub uav_mass: T,
    /// UAV inertia tensor `I_B` in the body frame (kg·m²).
    pub uav_inertia: Matrix3<T>,
    pub link_lengths: [T; NUM_LINKS],
    pub link_masses: [T; NUM_LINKS],
    /// Link inertia about its center of mass (kg·m²), taken as isotropic.
    pub link_inertias: [T; NUM_LINKS],
    /// Gravitational acceleration magnitude (m/s²).
    pub gravity: T,
    /// Maximum achievable acceleration used for braking margins (m/s²).
    pub alpha_max: T,
    /// Bound on |roll| and |pitch| (rad).
    pub attitude_limit: T,
    /// Bounds on |θ1| and |θ1 + θ2| (rad).
    pub joint_limits: [T; NUM_LINKS],
}

impl Default for AmParams<f64> {
    fn default() -> Self {
        use std::f64::consts::PI;
        Self {
            uav_mass: 3.3,
            uav_inertia: Matrix3::from_diagonal(&Vector3::new(0.3, 0.3, 0.6)),
            link_lengths: [0.15, 0.15],
            link_masses: [0.1, 0.1],
            link_inertias: [4.256e-5, 8.321e-5],
            gravity: 9.81,
            alpha_max: 2.0,
            attitude_limit: PI / 10.0,
            joint_limits: [PI / 3.0, PI / 2.0],
        }
    }
}

impl<T: Real> AmParams<T> {
    /// Combined mass `m_am` of UAV and arm.
    pub fn total_mass(&self) -> T {
        self.uav_mass + self.arm_mass()
    }

    pub fn arm_mass(&self) -> T {
        self.link_masses[0] + self.link_masses[1]
    }

    pub fn reach(&self) -> T {
        self.link_lengths[0] + self.link_lengths[1]
    }

    /// Casts every field into another scalar type.
    pub fn cast<U: Real>(&self) -> AmParams<U>
    where
        T: Into<f64>,
    {
        let f = |x: T| -> U { c(x.into()) };
        AmParams {
            uav_mass: f(self.uav_mass),
            uav_inertia: self.uav_inertia.map(f),
            link_lengths: self.link_lengths.map(f),
            link_masses: self.link_masses.map(f),
            link_inertias: self.link_inertias.map(f),
            gravity: f(self.gravity),
            alpha_max: f(self.alpha_max),
            attitude_limit: f(self.attitude_limit),
            joint_limits: self.joint_limits.map(f),
        }
    }

    /// Rotation from link frame `i` to the body frame at joint angles `joints`.
    ///
    /// Link frames put x along the link and z along the joint axis (body `-y`).
    pub fn link_rotation(&self, joints: &Vector2<T>, link: usize) -> Matrix3<T> {
        let q = (0..=link).fold(T::zero(), |acc, k| acc + joints[k]);
        let (s, co) = (q.sin(), q.cos());
        let zero = T::zero();
        let one = T::one();
        // Columns: link x, link y, link z expressed in the body frame.
        Matrix3::new(s, co, zero, zero, zero, -one, -co, s, zero)
    }

    /// Arm inertia about the body origin expressed in the body frame.
    pub fn arm_inertia(&self, joints: &Vector2<T>) -> Matrix3<T> {
        let (joint2, _) = arm_points_body(self, joints);
        let mut inertia = Matrix3::zeros();
        for i in 0..NUM_LINKS {
            let start = if i == 0 { Vector3::zeros() } else { joint2 };
            let dir = self.link_rotation(joints, i).column(0).into_owned();
            let com = start + dir * (self.link_lengths[i] * c(0.5));
            let m = self.link_masses[i];
            inertia += Matrix3::identity() * self.link_inertias[i]
                + (Matrix3::identity() * com.dot(&com) - com * com.transpose()) * m;
        }
        inertia
    }

    /// Combined inertia `I_am` about the body origin for the current arm pose.
    pub fn total_inertia(&self, joints: &Vector2<T>) -> Matrix3<T> {
        self.uav_inertia + self.arm_inertia(joints)
    }

    /// Arm center of mass in the body frame.
    pub fn arm_com_body(&self, joints: &Vector2<T>) -> Vector3<T> {
        let (joint2, _) = arm_points_body(self, joints);
        let d1 = self.link_rotation(joints, 0).column(0).into_owned();
        let d2 = self.link_rotation(joints, 1).column(0).into_owned();
        let half: T = c(0.5);
        let c1 = d1 * (self.link_lengths[0] * half);
        let c2 = joint2 + d2 * (self.link_lengths[1] * half);
        (c1 * self.link_masses[0] + c2 * self.link_masses[1]) / self.arm_mass()
    }
}

impl AmParams<f64> {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive("uav_mass", self.uav_mass)?;
        positive("gravity", self.gravity)?;
        positive("alpha_max", self.alpha_max)?;
        positive("attitude_limit", self.attitude_limit)?;
        for i in 0..NUM_LINKS {
            positive("link_lengths", self.link_lengths[i])?;
            positive("link_masses", self.link_masses[i])?;
            positive("link_inertias", self.link_inertias[i])?;
            positive("joint_limits", self.joint_limits[i])?;
        }
        let inertia = &self.uav_inertia;
        if (inertia - inertia.transpose()).abs().max() > 1e-12 {
            return Err(ConfigError::Invalid("uav_inertia must be symmetric".into()));
        }
        if inertia.cholesky().is_none() {
            return Err(ConfigError::Invalid("uav_inertia must be positive definite".into()));
        }
        Ok(())
    }
}

/// Joint-2 and end-effector positions in the body frame.
pub fn arm_points_body<T: Real>(params: &AmParams<T>, joints: &Vector2<T>) -> (Vector3<T>, Vector3<T>) {
    let d1 = params.link_rotation(joints, 0).column(0).into_owned();
    let d2 = params.link_rotation(joints, 1).column(0).into_owned();
    let joint2 = d1 * params.link_lengths[0];
    (joint2, joint2 + d2 * params.link_lengths[1])
}

/// Full simulation state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState<T: Real> {
    pub position: Vector3<T>,
    pub velocity: Vector3<T>,
    /// Euler angles `[φ, θ, ψ]`.
    pub euler: Vector3<T>,
    pub body_rate: Vector3<T>,
    pub joints: Vector2<T>,
    pub joint_rates: Vector2<T>,
}

impl<T: Real> PlantState<T> {
    pub fn at_rest(position: Vector3<T>, joints: Vector2<T>) -> Self {
        Self {
            position,
            velocity: Vector3::zeros(),
            euler: Vector3::zeros(),
            body_rate: Vector3::zeros(),
            joints,
            joint_rates: Vector2::zeros(),
        }
    }

    /// Body-to-inertial rotation.
    pub fn rotation(&self) -> Matrix3<T> {
        Rotation3::from_euler_angles(self.euler[0], self.euler[1], self.euler[2]).into_inner()
    }

    /// Euler angle rates from body rates.
    pub fn euler_rates(&self) -> Result<Vector3<T>, DynamicsError> {
        euler_rates(&self.euler, &self.body_rate)
    }
}

/// Maps body rates to `[φ̇, θ̇, ψ̇]` for ZYX Euler angles.
pub fn euler_rates<T: Real>(euler: &Vector3<T>, rate: &Vector3<T>) -> Result<Vector3<T>, DynamicsError> {
    let (phi, theta) = (euler[0], euler[1]);
    let half_pi = T::frac_pi_2();
    if phi.abs() >= half_pi || theta.abs() >= half_pi {
        return Err(DynamicsError::SingularAttitude);
    }
    let (sp, cp) = (phi.sin(), phi.cos());
    let (tt, ct) = (theta.tan(), theta.cos());
    let (p, q, r) = (rate[0], rate[1], rate[2]);
    Ok(Vector3::new(
        p + (sp * q + cp * r) * tt,
        cp * q - sp * r,
        (sp * q + cp * r) / ct,
    ))
}

/// A force/torque pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench<T: Real> {
    pub force: Vector3<T>,
    pub torque: Vector3<T>,
    pub frame: WrenchFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WrenchFrame {
    Body,
    Link(usize),
}

impl<T: Real> Wrench<T> {
    pub fn zero(frame: WrenchFrame) -> Self {
        Self { force: Vector3::zeros(), torque: Vector3::zeros(), frame }
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.torque.iter()).all(|v| v.is_finite())
    }
}

/// Per-link quantities produced by the forward recursion, all in the link's
/// own frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState<T: Real> {
    pub omega: Vector3<T>,
    pub alpha: Vector3<T>,
    /// Acceleration of the link's distal end.
    pub accel_end: Vector3<T>,
    pub accel_com: Vector3<T>,
    /// Velocity of the distal end relative to the base origin.
    pub vel_end: Vector3<T>,
    /// Position of the distal end relative to the base origin.
    pub pos_end: Vector3<T>,
    /// Link-to-body rotation.
    pub rotation: Matrix3<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkKinematics<T: Real> {
    pub links: [LinkState<T>; NUM_LINKS],
}
