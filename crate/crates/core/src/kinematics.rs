//! End-effector and critical-point kinematics, wall clearance and workspace
//! deviation.

use nalgebra::{Matrix3, Rotation3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::{arm_points_body, AmParams, PlantState};
use crate::error::ConfigError;
use crate::scalar::{c, Real};

/// Anything that pins down the pose and motion of the arm chain in the
/// inertial frame.
pub trait ChainState<T: Real> {
    fn position(&self) -> Vector3<T>;
    fn velocity(&self) -> Vector3<T>;
    /// Body-to-inertial rotation.
    fn rotation(&self) -> Matrix3<T>;
    /// Body angular velocity expressed in the inertial frame.
    fn angular_velocity(&self) -> Vector3<T>;
    fn joints(&self) -> Vector2<T>;
    fn joint_rates(&self) -> Vector2<T>;
}

impl<T: Real> ChainState<T> for PlantState<T> {
    fn position(&self) -> Vector3<T> {
        self.position
    }
    fn velocity(&self) -> Vector3<T> {
        self.velocity
    }
    fn rotation(&self) -> Matrix3<T> {
        PlantState::rotation(self)
    }
    fn angular_velocity(&self) -> Vector3<T> {
        PlantState::rotation(self) * self.body_rate
    }
    fn joints(&self) -> Vector2<T> {
        self.joints
    }
    fn joint_rates(&self) -> Vector2<T> {
        self.joint_rates
    }
}

/// Yaw-only rotation used wherever roll and pitch are taken as zero.
pub fn yaw_rotation<T: Real>(yaw: T) -> Matrix3<T> {
    Rotation3::from_euler_angles(T::zero(), T::zero(), yaw).into_inner()
}

/// Inertial position and velocity of a point fixed in the arm chain, given
/// its body-frame position and body-frame velocity relative to the joint
/// motion.
fn chain_point<T: Real, S: ChainState<T>>(x: &S, r_body: Vector3<T>, rd_body: Vector3<T>) -> (Vector3<T>, Vector3<T>) {
    let rot = x.rotation();
    let r = rot * r_body;
    let v = x.velocity() + x.angular_velocity().cross(&r) + rot * rd_body;
    (x.position() + r, v)
}

/// Body-frame positions and joint-induced velocities of joint 2 and the
/// end-effector.
fn arm_point_rates<T: Real>(params: &AmParams<T>, joints: &Vector2<T>, rates: &Vector2<T>) -> [(Vector3<T>, Vector3<T>); 2] {
    let (joint2, ee) = arm_points_body(params, joints);
    let q12 = joints[0] + joints[1];
    // d/dq of the link direction (sin q, 0, -cos q).
    let ddir = |q: T| Vector3::new(q.cos(), T::zero(), q.sin());
    let joint2_rate = ddir(joints[0]) * (params.link_lengths[0] * rates[0]);
    let ee_rate = joint2_rate + ddir(q12) * (params.link_lengths[1] * (rates[0] + rates[1]));
    [(joint2, joint2_rate), (ee, ee_rate)]
}

/// End-effector position and velocity in the inertial frame.
pub fn end_effector_state<T: Real, S: ChainState<T>>(x: &S, params: &AmParams<T>) -> (Vector3<T>, Vector3<T>) {
    let [_, (r, rd)] = arm_point_rates(params, &x.joints(), &x.joint_rates());
    chain_point(x, r, rd)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointId {
    Base,
    Joint2,
    EndEffector,
}

impl PointId {
    pub const ALL: [PointId; 3] = [PointId::Base, PointId::Joint2, PointId::EndEffector];

    pub fn name(self) -> &'static str {
        match self {
            PointId::Base => "base",
            PointId::Joint2 => "joint2",
            PointId::EndEffector => "ee",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint<T: Real> {
    pub id: PointId,
    pub position: Vector3<T>,
    pub velocity: Vector3<T>,
    pub safety_radius: T,
}

/// The three points whose clearance guarantees clearance of the whole
/// aerial manipulator, ordered base, joint 2, end-effector.
pub fn critical_points<T: Real, S: ChainState<T>>(x: &S, params: &AmParams<T>, radii: [T; 3]) -> [CriticalPoint<T>; 3] {
    let [(j2, j2d), (ee, eed)] = arm_point_rates(params, &x.joints(), &x.joint_rates());
    let base = (x.position(), chain_point(x, Vector3::zeros(), Vector3::zeros()).1);
    let joint2 = chain_point(x, j2, j2d);
    let end = chain_point(x, ee, eed);
    let points = [base, joint2, end];
    std::array::from_fn(|i| CriticalPoint {
        id: PointId::ALL[i],
        position: points[i].0,
        velocity: points[i].1,
        safety_radius: radii[i],
    })
}

/// A planar wall `a·x + b·y + c·z + d = 0` with its normal pointing into the
/// free region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWall", into = "RawWall")]
pub struct WallPlane {
    normal: Vector3<f64>,
    offset: f64,
    s_min: f64,
}

#[derive(Serialize, Deserialize)]
struct RawWall {
    normal: [f64; 3],
    offset: f64,
    s_min: f64,
}

impl TryFrom<RawWall> for WallPlane {
    type Error = ConfigError;
    fn try_from(raw: RawWall) -> Result<Self, ConfigError> {
        WallPlane::new(Vector3::from(raw.normal), raw.offset, raw.s_min)
    }
}

impl From<WallPlane> for RawWall {
    fn from(w: WallPlane) -> Self {
        RawWall { normal: w.normal.into(), offset: w.offset, s_min: w.s_min }
    }
}

impl WallPlane {
    /// Builds a wall, rescaling `(a, b, c, d)` so the normal has unit length.
    pub fn new(normal: Vector3<f64>, offset: f64, s_min: f64) -> Result<Self, ConfigError> {
        let norm = normal.norm();
        if !(norm > 1e-12 && norm.is_finite() && offset.is_finite()) {
            return Err(ConfigError::Invalid(format!("wall normal must be nonzero and finite, got {normal:?}")));
        }
        if !(s_min > 0.0) {
            return Err(ConfigError::Invalid(format!("wall s_min must be positive, got {s_min}")));
        }
        Ok(Self { normal: normal / norm, offset: offset / norm, s_min })
    }

    pub fn normal(&self) -> Vector3<f64> {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    /// Signed distance from the plane, positive on the free side.
    pub fn signed_distance<T: Real>(&self, point: &Vector3<T>) -> T {
        self.normal.map(c::<T>).dot(point) + c(self.offset)
    }
}

/// Perpendicular vector from the wall to `point`.
pub fn wall_clearance<T: Real>(point: &Vector3<T>, wall: &WallPlane) -> Vector3<T> {
    let n = wall.normal.map(c::<T>);
    n * wall.signed_distance(point)
}

/// Spherical free workspace for the UAV, centered at `p_d − center_offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkspaceSphere {
    /// `d_iw`; the default points down so the sphere sits above the
    /// end-effector target.
    pub center_offset: Vector3<f64>,
    pub radius: f64,
}

impl Default for WorkspaceSphere {
    fn default() -> Self {
        Self { center_offset: Vector3::new(0.0, 0.0, -0.225), radius: 0.075 }
    }
}

impl WorkspaceSphere {
    pub fn validate(&self, params: &AmParams<f64>) -> Result<(), ConfigError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(ConfigError::Invalid(format!("workspace radius must be positive, got {}", self.radius)));
        }
        if !(self.center_offset.norm() < params.reach()) {
            return Err(ConfigError::Invalid(format!(
                "workspace offset {} must be shorter than the arm reach {}",
                self.center_offset.norm(),
                params.reach()
            )));
        }
        Ok(())
    }

    pub fn center<T: Real>(&self, p_d: &Vector3<T>) -> Vector3<T> {
        p_d - self.center_offset.map(c::<T>)
    }
}

/// Deviation of the UAV from the workspace center, `p_I − (p_d − d_iw)`.
pub fn workspace_deviation<T: Real, S: ChainState<T>>(x: &S, p_d: &Vector3<T>, ws: &WorkspaceSphere) -> Vector3<T> {
    x.position() - ws.center(p_d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    type P = AmParams<f64>;

    fn at(joints: [f64; 2]) -> PlantState<f64> {
        PlantState::at_rest(Vector3::zeros(), Vector2::from(joints))
    }

    /// Planar forward kinematics written out by hand: `(x, z)` of the tip.
    fn planar_tip(l1: f64, l2: f64, q1: f64, q2: f64) -> (f64, f64) {
        (l1 * q1.sin() + l2 * (q1 + q2).sin(), -l1 * q1.cos() - l2 * (q1 + q2).cos())
    }

    #[test]
    fn end_effector_zero_configuration() {
        let (p, v) = end_effector_state(&at([0.0, 0.0]), &P::default());
        assert_relative_eq!(p, Vector3::new(0.0, 0.0, -0.3), epsilon = 1e-15);
        assert_eq!(v, Vector3::zeros());
    }

    #[test]
    fn end_effector_horizontal() {
        let (p, _) = end_effector_state(&at([FRAC_PI_2, 0.0]), &P::default());
        let (x, z) = planar_tip(0.15, 0.15, FRAC_PI_2, 0.0);
        assert_relative_eq!(p, Vector3::new(x, 0.0, z), epsilon = 1e-15);
        assert_relative_eq!(p, Vector3::new(0.3, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn rigid_translation_velocity() {
        let mut s = at([0.4, -0.7]);
        s.velocity = Vector3::new(0.3, -1.0, 0.2);
        let (_, v) = end_effector_state(&s, &P::default());
        assert_relative_eq!(v, s.velocity, epsilon = 1e-15);
    }

    #[test]
    fn yaw_rotates_the_arm_plane() {
        let mut s = at([FRAC_PI_2, 0.0]);
        s.euler[2] = FRAC_PI_2;
        let (p, _) = end_effector_state(&s, &P::default());
        assert_relative_eq!(p, Vector3::new(0.0, 0.3, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn critical_points_zero_configuration() {
        let pts = critical_points(&at([0.0, 0.0]), &P::default(), [0.1; 3]);
        assert_eq!(pts.map(|p| p.id), PointId::ALL);
        assert_relative_eq!(pts[0].position, Vector3::zeros());
        assert_relative_eq!(pts[1].position, Vector3::new(0.0, 0.0, -0.15), epsilon = 1e-15);
        assert_relative_eq!(pts[2].position, Vector3::new(0.0, 0.0, -0.3), epsilon = 1e-15);
    }

    #[test]
    fn critical_points_folded_arm() {
        let pts = critical_points(&at([FRAC_PI_2, FRAC_PI_2]), &P::default(), [0.1; 3]);
        let (x, z) = planar_tip(0.15, 0.15, FRAC_PI_2, FRAC_PI_2);
        assert_relative_eq!(pts[1].position, Vector3::new(0.15, 0.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(pts[2].position, Vector3::new(x, 0.0, z), epsilon = 1e-15);
        assert_relative_eq!(pts[2].position, Vector3::new(0.15, 0.0, 0.15), epsilon = 1e-15);
    }

    #[test]
    fn point_velocities_match_finite_differences() {
        let p = P::default();
        let mut s = at([0.3, -0.5]);
        s.euler = Vector3::new(0.1, -0.2, 0.7);
        s.body_rate = Vector3::new(0.3, 0.2, -0.4);
        s.velocity = Vector3::new(0.1, 0.2, 0.3);
        s.joint_rates = Vector2::new(0.8, -1.1);
        let h = 1e-6;
        let shifted = |dt: f64| {
            let mut t = s;
            t.position += s.velocity * dt;
            t.euler += s.euler_rates().unwrap() * dt;
            t.joints += s.joint_rates * dt;
            critical_points(&t, &p, [0.1; 3])
        };
        let (plus, minus) = (shifted(h), shifted(-h));
        let now = critical_points(&s, &p, [0.1; 3]);
        for i in 0..3 {
            let fd = (plus[i].position - minus[i].position) / (2.0 * h);
            assert_relative_eq!(now[i].velocity, fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn wall_clearance_axis_aligned() {
        let wall = WallPlane::new(Vector3::x(), 1.0, 0.1).unwrap();
        assert_relative_eq!(wall_clearance(&Vector3::new(0.5, 2.0, 3.0), &wall), Vector3::new(1.5, 0.0, 0.0));
        assert_eq!(wall_clearance(&Vector3::new(-1.0, 7.0, -2.0), &wall), Vector3::zeros());
    }

    #[test]
    fn wall_is_normalized_on_ingestion() {
        let wall = WallPlane::new(Vector3::new(0.0, 2.0, 0.0), -4.0, 0.1).unwrap();
        assert_relative_eq!(wall.normal(), Vector3::y());
        assert_relative_eq!(wall.offset(), -2.0);
        assert!(WallPlane::new(Vector3::zeros(), 1.0, 0.1).is_err());
        assert!(WallPlane::new(Vector3::x(), 1.0, 0.0).is_err());
        let parsed: WallPlane = toml::from_str("normal = [3.0, 0.0, 4.0]\noffset = 5.0\ns_min = 0.1").unwrap();
        assert_relative_eq!(parsed.normal(), Vector3::new(0.6, 0.0, 0.8));
        assert_relative_eq!(parsed.offset(), 1.0);
    }

    #[test]
    fn workspace_deviation_examples() {
        let ws = WorkspaceSphere { center_offset: Vector3::new(0.0, 0.0, 0.225), radius: 0.3 };
        let p_d = Vector3::new(1.0, 2.0, 3.0);
        let s = PlantState::at_rest(p_d, Vector2::zeros());
        assert_relative_eq!(workspace_deviation(&s, &p_d, &ws), Vector3::new(0.0, 0.0, 0.225));
        let centered = PlantState::at_rest(ws.center(&p_d), Vector2::zeros());
        assert_eq!(workspace_deviation(&centered, &p_d, &ws), Vector3::zeros());
        assert!(ws.validate(&P::default()).is_ok());
        let too_far = WorkspaceSphere { center_offset: Vector3::new(0.0, 0.0, 0.4), radius: 0.1 };
        assert!(too_far.validate(&P::default()).is_err());
    }

    proptest! {
        #[test]
        fn clearance_is_parallel_to_normal(
            n in prop::array::uniform3(-1.0f64..1.0),
            d in -5.0f64..5.0,
            x in prop::array::uniform3(-10.0f64..10.0),
        ) {
            prop_assume!(Vector3::from(n).norm() > 1e-3);
            let raw = Vector3::from(n);
            let wall = WallPlane::new(raw, d, 0.1).unwrap();
            let point = Vector3::from(x);
            let s = wall_clearance(&point, &wall);
            prop_assert!(s.cross(&wall.normal()).norm() <= 1e-12 * (1.0 + s.norm()));
            let direct = (raw.dot(&point) + d).abs() / raw.norm();
            prop_assert!((s.norm() - direct).abs() <= 1e-9 * (1.0 + direct));
        }

        #[test]
        fn chain_geometry_is_consistent(
            q1 in -3.2f64..3.2, q2 in -3.2f64..3.2,
            roll in -1.0f64..1.0, pitch in -1.0f64..1.0, yaw in -3.2f64..3.2,
            px in -5.0f64..5.0,
        ) {
            let p = P::default();
            let mut s = PlantState::at_rest(Vector3::new(px, 0.5, -1.0), Vector2::new(q1, q2));
            s.euler = Vector3::new(roll, pitch, yaw);
            let pts = critical_points(&s, &p, [0.1; 3]);
            prop_assert_eq!(pts[0].position, s.position);
            prop_assert!(((pts[1].position - pts[0].position).norm() - 0.15).abs() < 1e-12);
            prop_assert!(((pts[2].position - pts[1].position).norm() - 0.15).abs() < 1e-12);
            let (ee, _) = end_effector_state(&s, &p);
            prop_assert!((ee - s.position).norm() <= 0.3 + 1e-12);
        }

        #[test]
        fn deviation_is_translation_invariant(
            shift in prop::array::uniform3(-10.0f64..10.0),
            pos in prop::array::uniform3(-10.0f64..10.0),
        ) {
            let ws = WorkspaceSphere::default();
            let p_d = Vector3::new(0.3, -0.2, 1.0);
            let shift = Vector3::from(shift);
            let a = PlantState::at_rest(Vector3::from(pos), Vector2::zeros());
            let b = PlantState::at_rest(Vector3::from(pos) + shift, Vector2::zeros());
            let da = workspace_deviation(&a, &p_d, &ws);
            let db = workspace_deviation(&b, &(p_d + shift), &ws);
            prop_assert!((da - db).norm() < 1e-12);
        }
    }
}
