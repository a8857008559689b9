//! Barrier Lyapunov functions for wall avoidance and workspace containment,
//! and the discrete forward-invariance residual built from them.

use nalgebra::{SVector, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ad;
use crate::dynamics::AmParams;
use crate::kinematics::{critical_points, workspace_deviation, ChainState, PointId, WallPlane, WorkspaceSphere};
use crate::mpc::{OuterState, STATE_DIM};
use crate::scalar::{c, signed_pow, Real};

/// Below this norm the radial direction of a workspace deviation is undefined.
pub const DEGENERATE_RADIUS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum BarrierError {
    #[error("state lies outside the barrier's domain (position margin {margin})")]
    InfeasibleGeometry { margin: f64 },
    #[error("deviation from the workspace center is too small to define a radial direction")]
    DegenerateCenter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>, BarrierParams<T>: Default"))]
pub struct BarrierParams<T: Real> {
    /// Relaxation gain `γ`.
    pub gamma: T,
    /// Exponent `z` of the class-K term.
    pub z: T,
    /// Tightening `λ`, in units of `h` (m/s).
    pub lambda: T,
    /// Braking acceleration `α_max` (m/s²).
    pub alpha_max: T,
}

impl Default for BarrierParams<f64> {
    fn default() -> Self {
        Self { gamma: 3.0, z: 1.0, lambda: 0.0, alpha_max: 2.0 }
    }
}

impl BarrierParams<f64> {
    pub fn validate(&self) -> Result<(), crate::ConfigError> {
        let ok = self.gamma > 0.0 && self.z > 0.0 && self.lambda >= 0.0 && self.alpha_max > 0.0;
        if ok && [self.gamma, self.z, self.lambda, self.alpha_max].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(crate::ConfigError::Invalid(format!("invalid barrier parameters {self:?}")))
        }
    }

    pub fn cast<T: Real>(&self) -> BarrierParams<T> {
        BarrierParams { gamma: c(self.gamma), z: c(self.z), lambda: c(self.lambda), alpha_max: c(self.alpha_max) }
    }
}

/// How the braking term treats a non-positive position margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Reject states outside the safe set.
    Strict,
    /// Below the given margin (m), replace `sqrt` by a quadratic that meets
    /// it with matching slope and passes through zero, then continue linearly
    /// for negative margins. The result is continuously differentiable
    /// everywhere, never exceeds the strict value, and keeps its sign.
    Extended(f64),
}

/// Barrier value before differentiation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierEval<T: Real> {
    pub h: T,
    /// Distance minus the safety bound (m).
    pub position_margin: T,
}

/// Barrier value with its gradient over the 12-d outer state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierValue {
    pub h: f64,
    pub grad_x: SVector<f64, STATE_DIM>,
    pub position_margin: f64,
}

/// `sqrt(2 α m)`, the speed from which a braking acceleration `α` stops the
/// point within the margin `m`.
fn braking<T: Real>(margin: T, alpha: T, domain: Domain) -> Result<T, BarrierError> {
    let two: T = c(2.0);
    match domain {
        Domain::Strict if margin < T::zero() || !margin.is_finite() => {
            Err(BarrierError::InfeasibleGeometry { margin: nalgebra::try_convert(margin).unwrap_or(f64::NAN) })
        }
        Domain::Strict => Ok((two * alpha * margin).sqrt()),
        Domain::Extended(eps) => {
            let eps: T = c(eps);
            if margin >= eps {
                return Ok((two * alpha * margin).sqrt());
            }
            let root = (two * alpha * eps).sqrt();
            let slope0 = root * c(1.5) / eps;
            if margin >= T::zero() {
                Ok(slope0 * margin - root * margin * margin / (two * eps * eps))
            } else {
                Ok(slope0 * margin)
            }
        }
    }
}

fn point_form<T: Real>(range: &Vector3<T>, v: &Vector3<T>, bp: &BarrierParams<T>, bound: T, domain: Domain) -> Result<BarrierEval<T>, BarrierError> {
    let dist = range.norm();
    let margin = dist - bound;
    let h = braking(margin, bp.alpha_max, domain)? + range.dot(v) / dist;
    Ok(BarrierEval { h, position_margin: margin })
}

/// Point-obstacle barrier `sqrt(2 α (‖p‖ − d_s)) + p̂·v`.
pub fn h_point_obstacle<T: Real>(p_vec: &Vector3<T>, v: &Vector3<T>, bp: &BarrierParams<T>, d_s: T) -> Result<BarrierEval<T>, BarrierError> {
    point_form(p_vec, v, bp, d_s, Domain::Strict)
}

/// Wall barrier `sqrt(2 α (‖s‖ − s_min)) + ŝ·v` for the clearance vector `s`.
pub fn h_wall<T: Real>(s_vec: &Vector3<T>, v: &Vector3<T>, bp: &BarrierParams<T>, s_min: T) -> Result<BarrierEval<T>, BarrierError> {
    point_form(s_vec, v, bp, s_min, Domain::Strict)
}

/// Wall barrier from the signed distance to the plane, which keeps its
/// meaning on the far side of the wall and so suits the optimizer.
pub fn h_wall_signed<T: Real>(
    distance: T,
    normal: &Vector3<T>,
    v: &Vector3<T>,
    bp: &BarrierParams<T>,
    s_min: T,
    domain: Domain,
) -> Result<BarrierEval<T>, BarrierError> {
    let margin = distance - s_min;
    let h = braking(margin, bp.alpha_max, domain)? + normal.dot(v);
    Ok(BarrierEval { h, position_margin: margin })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Guards against leaving the sphere radially.
    Outward,
    /// Mirror barrier on the inward radial speed.
    Inward,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Outward, Side::Inward];
}

/// Containment barrier `sqrt(2 α (r − ‖d‖)) ∓ d̂·v_rel`.
pub fn h_workspace<T: Real>(d_vec: &Vector3<T>, v_rel: &Vector3<T>, bp: &BarrierParams<T>, r: T, side: Side) -> Result<BarrierEval<T>, BarrierError> {
    h_workspace_in(d_vec, v_rel, bp, r, side, Domain::Strict)
}

pub fn h_workspace_in<T: Real>(
    d_vec: &Vector3<T>,
    v_rel: &Vector3<T>,
    bp: &BarrierParams<T>,
    r: T,
    side: Side,
    domain: Domain,
) -> Result<BarrierEval<T>, BarrierError> {
    let dist = d_vec.norm();
    if dist < c(DEGENERATE_RADIUS) {
        return Err(BarrierError::DegenerateCenter);
    }
    let margin = r - dist;
    let radial = d_vec.dot(v_rel) / dist;
    let brake = braking(margin, bp.alpha_max, domain)?;
    let h = match side {
        Side::Outward => brake - radial,
        Side::Inward => brake + radial,
    };
    Ok(BarrierEval { h, position_margin: margin })
}

/// Forward-difference form of `ḣ + γ (h^z − λ)`; the constraint holds iff
/// the result is nonnegative.
pub fn invariance_residual<T: Real>(h_now: T, h_next: T, bp: &BarrierParams<T>, dt: T) -> T {
    (h_next - h_now) / dt + bp.gamma * (signed_pow(h_now, bp.z) - bp.lambda)
}

/// Closed-form `‖p‖ (ḣ + γ h^z)` for the point-obstacle barrier under
/// `ṗ = v`, `v̇ = u`.
pub fn analytic_invariance_point<T: Real>(
    p_vec: &Vector3<T>,
    v: &Vector3<T>,
    u: &Vector3<T>,
    bp: &BarrierParams<T>,
    d_s: T,
) -> Result<T, BarrierError> {
    let value = h_point_obstacle(p_vec, v, bp, d_s)?;
    let dist = p_vec.norm();
    let root = braking(dist - d_s, bp.alpha_max, Domain::Strict)?;
    let radial = p_vec.dot(v) / dist;
    Ok(bp.alpha_max * v.dot(p_vec) / root - radial * radial
        + v.norm_squared()
        + p_vec.dot(u)
        + bp.gamma * signed_pow(value.h, bp.z) * dist)
}

/// One barrier family member, evaluated on predicted outer states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BarrierSpec {
    Wall { wall: WallPlane, point: PointId, safety_radius: f64 },
    Workspace { sphere: WorkspaceSphere, side: Side },
}

/// Reference position and velocity at the evaluated step (used only by the
/// workspace barriers).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReference<T: Real> {
    pub position: Vector3<T>,
    pub velocity: Vector3<T>,
}

impl StepReference<f64> {
    pub fn cast<T: Real>(&self) -> StepReference<T> {
        StepReference { position: self.position.map(c), velocity: self.velocity.map(c) }
    }
}

impl BarrierSpec {
    pub fn evaluate<T: Real>(
        &self,
        x: &OuterState<T>,
        params: &AmParams<T>,
        reference: &StepReference<T>,
        bp: &BarrierParams<T>,
        domain: Domain,
    ) -> Result<BarrierEval<T>, BarrierError> {
        match *self {
            BarrierSpec::Wall { wall, point, safety_radius } => {
                let radii = [c(safety_radius); 3];
                let cp = critical_points(x, params, radii)[point as usize];
                let bound = c(wall.s_min().max(safety_radius));
                let normal = wall.normal().map(c);
                h_wall_signed(wall.signed_distance(&cp.position), &normal, &cp.velocity, bp, bound, domain)
            }
            BarrierSpec::Workspace { sphere, side } => {
                let d = workspace_deviation(x, &reference.position, &sphere);
                let v_rel = x.velocity() - reference.velocity;
                h_workspace_in(&d, &v_rel, bp, c(sphere.radius), side, domain)
            }
        }
    }

    /// Value and state gradient by forward-mode differentiation.
    pub fn value(
        &self,
        x: &OuterState<f64>,
        params: &AmParams<f64>,
        reference: &StepReference<f64>,
        bp: &BarrierParams<f64>,
        domain: Domain,
    ) -> Result<BarrierValue, BarrierError> {
        let e = self.evaluate(&OuterState(ad::seed(&x.0)), &params.cast(), &reference.cast(), &bp.cast(), domain)?;
        let (h, grad_x) = ad::split(&e.h);
        Ok(BarrierValue { h, grad_x, position_margin: e.position_margin.re })
    }
}
