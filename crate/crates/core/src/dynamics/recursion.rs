//! Recursive Newton–Euler pass over the arm with a moving base.

use nalgebra::{Matrix3, Vector2, Vector3};

use super::{AmParams, LinkKinematics, LinkState, Wrench, WrenchFrame, NUM_LINKS};
use crate::scalar::{c, Real};

/// Motion of the base (body frame), fed into the forward recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseMotion<T: Real> {
    pub omega: Vector3<T>,
    pub omega_dot: Vector3<T>,
    /// Inertial acceleration of the body origin, expressed in the body frame.
    pub linear_accel: Vector3<T>,
}

impl<T: Real> BaseMotion<T> {
    pub fn fixed() -> Self {
        Self { omega: Vector3::zeros(), omega_dot: Vector3::zeros(), linear_accel: Vector3::zeros() }
    }
}

fn joint_axis<T: Real>() -> Vector3<T> {
    Vector3::z()
}

/// Propagates velocities and accelerations from the base to the end-effector.
pub fn forward_recursion<T: Real>(
    params: &AmParams<T>,
    base: &BaseMotion<T>,
    joints: &Vector2<T>,
    rates: &Vector2<T>,
    accels: &Vector2<T>,
) -> LinkKinematics<T> {
    let z = joint_axis::<T>();
    let mut prev_rot = Matrix3::<T>::identity();
    let mut omega = base.omega;
    let mut alpha = base.omega_dot;
    let mut accel_end = base.linear_accel;
    let mut vel_end = Vector3::zeros();
    let mut pos_end = Vector3::zeros();

    let links = std::array::from_fn(|i| {
        let rotation = params.link_rotation(joints, i);
        // ^iR_{i-1}
        let step = rotation.transpose() * prev_rot;
        let r_end = Vector3::new(params.link_lengths[i], T::zero(), T::zero());
        let r_com = r_end * c::<T>(0.5);

        omega = step * omega + z * rates[i];
        alpha = step * alpha + z * accels[i] + omega.cross(&(z * rates[i]));
        let carried = step * accel_end;
        let accel_com = carried + alpha.cross(&r_com) + omega.cross(&omega.cross(&r_com));
        accel_end = carried + alpha.cross(&r_end) + omega.cross(&omega.cross(&r_end));
        vel_end = step * vel_end + omega.cross(&r_end);
        pos_end = step * pos_end + r_end;
        prev_rot = rotation;

        LinkState { omega, alpha, accel_end, accel_com, vel_end, pos_end, rotation }
    });
    LinkKinematics { links }
}

/// Wrench applied to each link by its predecessor, in the link's own frame
/// and about its proximal joint.
fn link_wrenches<T: Real>(
    params: &AmParams<T>,
    kin: &LinkKinematics<T>,
    gravity_body: &Vector3<T>,
) -> [(Vector3<T>, Vector3<T>); NUM_LINKS] {
    let mut out = [(Vector3::zeros(), Vector3::zeros()); NUM_LINKS];
    let mut force_next = Vector3::<T>::zeros();
    let mut torque_next = Vector3::<T>::zeros();
    let mut rot_next = Matrix3::<T>::identity();
    let half: T = c(0.5);

    for i in (0..NUM_LINKS).rev() {
        let link = &kin.links[i];
        // ^iR_{i+1}; irrelevant past the last link where the wrench is zero.
        let step = link.rotation.transpose() * rot_next;
        let m = params.link_masses[i];
        let inertia = params.link_inertias[i];
        let gravity = link.rotation.transpose() * gravity_body;
        let r_start_com = Vector3::new(params.link_lengths[i] * half, T::zero(), T::zero());
        let r_end_com = -r_start_com;

        let carried_force = step * force_next;
        let force = carried_force + (link.accel_com - gravity) * m;
        let torque = step * torque_next - force.cross(&r_start_com)
            + carried_force.cross(&r_end_com)
            + link.alpha * inertia
            + link.omega.cross(&(link.omega * inertia));

        out[i] = (force, torque);
        force_next = force;
        torque_next = torque;
        rot_next = link.rotation;
    }
    out
}

/// Force and torque the arm exerts on the base, about the body origin and
/// expressed in the body frame.
///
/// `gravity_body` is the gravity vector in the body frame; it is rotated into
/// each link frame internally. The terminal wrench beyond the end-effector is
/// zero.
pub fn backward_recursion<T: Real>(
    params: &AmParams<T>,
    kin: &LinkKinematics<T>,
    gravity_body: &Vector3<T>,
) -> Wrench<T> {
    let (force, torque) = link_wrenches(params, kin, gravity_body)[0];
    // Joint 1 sits at the body origin, so only a rotation is needed.
    let to_body = kin.links[0].rotation;
    Wrench { force: -(to_body * force), torque: -(to_body * torque), frame: WrenchFrame::Body }
}

/// Forward then backward recursion in one call.
pub fn base_reaction<T: Real>(
    params: &AmParams<T>,
    base: &BaseMotion<T>,
    joints: &Vector2<T>,
    rates: &Vector2<T>,
    accels: &Vector2<T>,
    gravity_body: &Vector3<T>,
) -> Wrench<T> {
    let kin = forward_recursion(params, base, joints, rates, accels);
    backward_recursion(params, &kin, gravity_body)
}

/// Actuator torque about each joint axis.
pub fn joint_torques<T: Real>(
    params: &AmParams<T>,
    kin: &LinkKinematics<T>,
    gravity_body: &Vector3<T>,
) -> Vector2<T> {
    let w = link_wrenches(params, kin, gravity_body);
    Vector2::new(w[0].1[2], w[1].1[2])
}
