//! Stage and terminal costs, written as weighted residuals whose squares sum
//! to the objective.

use nalgebra::Vector3;

use super::{ControlInput, MpcConfig, OuterState, SafetyGeometry, Variant, Weights};
use crate::blf::StepReference;
use crate::dynamics::AmParams;
use crate::kinematics::{critical_points, end_effector_state, workspace_deviation, ChainState};
use crate::scalar::{c, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostTerm {
    /// End-effector tracking error.
    Tracking,
    /// End-effector velocity.
    EeVelocity,
    /// Horizontal offset of the arm center of mass in the body frame.
    Balance,
    /// Soft wall proximity.
    WallProximity,
    /// Soft workspace exit.
    Containment,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CostBreakdown {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub l5: f64,
    /// Input effort penalty.
    pub effort: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.l1 + self.l2 + self.l3 + self.l4 + self.l5 + self.effort
    }

    pub fn add(&mut self, term: CostTerm, value: f64) {
        match term {
            CostTerm::Tracking => self.l1 += value,
            CostTerm::EeVelocity => self.l2 += value,
            CostTerm::Balance => self.l3 += value,
            CostTerm::WallProximity => self.l4 += value,
            CostTerm::Containment => self.l5 += value,
        }
    }
}

/// Read-only data shared by every cost and constraint evaluation in a solve.
#[derive(Debug, Clone, Copy)]
pub struct MpcContext<'a> {
    pub params: &'a AmParams<f64>,
    pub cfg: &'a MpcConfig,
    pub geometry: &'a SafetyGeometry,
    /// References for steps `0..=n`.
    pub refs: &'a [StepReference<f64>],
}

fn weighted<T: Real>(out: &mut Vec<(CostTerm, T)>, term: CostTerm, v: &Vector3<T>, w: &[f64; 3]) {
    for k in 0..3 {
        out.push((term, v[k] * c::<T>(w[k].sqrt())));
    }
}

/// Residuals of one horizon step; the step cost is the sum of their squares.
pub fn stage_residuals<T: Real>(x: &OuterState<T>, step: usize, ctx: &MpcContext<'_>) -> Vec<(CostTerm, T)> {
    let w = &ctx.cfg.weights;
    let terminal = step == ctx.cfg.horizon;
    let pick = |stage: &[f64; 3], end: &[f64; 3]| if terminal { *end } else { *stage };
    let params = ctx.params.cast::<T>();
    let reference = ctx.refs[step].cast::<T>();
    let mut out = Vec::with_capacity(12);

    let (p_e, v_e) = end_effector_state(x, &params);
    weighted(&mut out, CostTerm::Tracking, &(p_e - reference.position), &pick(&w.w1, &w.ws1));
    weighted(&mut out, CostTerm::EeVelocity, &v_e, &pick(&w.w2, &w.ws2));
    let com = params.arm_com_body(&x.joints());
    let com_xy = Vector3::new(com[0], com[1], T::zero());
    weighted(&mut out, CostTerm::Balance, &com_xy, &pick(&w.w3, &w.ws3));

    if ctx.cfg.variant != Variant::Sc {
        return out;
    }
    match ctx.geometry {
        SafetyGeometry::Walls { walls, radii } => {
            let weight = pick(&w.w4, &w.ws4);
            let floor: T = c(ctx.cfg.soft_floor.sqrt());
            let points = critical_points(x, &params, radii.map(c));
            for wall in walls {
                let n = wall.normal();
                let scale = (0..3).map(|k| weight[k] * n[k] * n[k]).sum::<f64>().sqrt();
                for (p, radius) in points.iter().zip(radii) {
                    let bound: T = c(wall.s_min().max(*radius));
                    let margin = wall.signed_distance(&p.position) - bound;
                    let denom = if margin > floor { margin } else { floor };
                    out.push((CostTerm::WallProximity, c::<T>(scale) / denom));
                }
            }
        }
        SafetyGeometry::Workspace(sphere) => {
            let d = workspace_deviation(x, &reference.position, sphere);
            let active = d.norm() >= c(sphere.radius);
            let d = if active { d } else { Vector3::zeros() };
            weighted(&mut out, CostTerm::Containment, &d, &pick(&w.w5, &w.ws5));
        }
        SafetyGeometry::Free => {}
    }
    out
}

/// Effort penalty of an input sequence.
pub fn effort_cost(u_seq: &[ControlInput<f64>], weights: &Weights) -> f64 {
    u_seq.iter().map(|u| u.0.iter().zip(&weights.effort).map(|(v, w)| w * v * v).sum::<f64>()).sum()
}

/// Cost of a predicted trajectory split by term.
pub fn evaluate_cost(x_seq: &[OuterState<f64>], u_seq: &[ControlInput<f64>], ctx: &MpcContext<'_>) -> CostBreakdown {
    let mut out = CostBreakdown { effort: effort_cost(u_seq, &ctx.cfg.weights), ..CostBreakdown::default() };
    for (i, x) in x_seq.iter().enumerate() {
        for (term, r) in stage_residuals(x, i, ctx) {
            out.add(term, r * r);
        }
    }
    out
}
