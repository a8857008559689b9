//! Inequality rows `g(U) ≥ 0` of the horizon problem.

use nalgebra::SVector;

use super::cost::MpcContext;
use super::{ControlInput, OuterState, SafetyGeometry, Variant, INPUT_DIM, STATE_DIM};
use crate::ad;
use crate::blf::{BarrierError, BarrierSpec, Domain, Side};
use crate::kinematics::{critical_points, workspace_deviation, PointId};
use crate::scalar::{c, signed_pow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    InputBox { step: usize, index: usize, upper: bool },
    StateBox { step: usize, index: usize, upper: bool },
    JointSum { step: usize, upper: bool },
    /// Position-level safety (wall clearance or containment).
    Hard { step: usize, barrier: usize },
    /// Barrier invariance between `step` and `step + 1`.
    Invariance { step: usize, barrier: usize },
}

impl ConstraintKind {
    /// Simple input bounds can always be met and are never relaxed.
    pub fn relaxable(&self) -> bool {
        !matches!(self, ConstraintKind::InputBox { .. })
    }
}

/// One constraint row with its derivative split into per-state gradients
/// and, for input bounds, a direct input coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub kind: ConstraintKind,
    pub value: f64,
    pub state_grads: Vec<(usize, SVector<f64, STATE_DIM>)>,
    /// `(flat input index, coefficient)`.
    pub input_grad: Option<(usize, f64)>,
}

/// The barriers used by the BLF variant for the given geometry, in a fixed
/// order: walls outer, critical points inner; or outward then inward.
pub fn barrier_specs(geometry: &SafetyGeometry) -> Vec<BarrierSpec> {
    match geometry {
        SafetyGeometry::Free => Vec::new(),
        SafetyGeometry::Walls { walls, radii } => walls
            .iter()
            .flat_map(|wall| PointId::ALL.into_iter().map(move |point| (wall, point)))
            .map(|(wall, point)| BarrierSpec::Wall { wall: *wall, point, safety_radius: radii[point as usize] })
            .collect(),
        SafetyGeometry::Workspace(sphere) => Side::BOTH.into_iter().map(|side| BarrierSpec::Workspace { sphere: *sphere, side }).collect(),
    }
}

/// Human-readable barrier names matching [`barrier_specs`].
pub fn barrier_names(geometry: &SafetyGeometry) -> Vec<String> {
    match geometry {
        SafetyGeometry::Free => Vec::new(),
        SafetyGeometry::Walls { walls, .. } => (0..walls.len())
            .flat_map(|w| PointId::ALL.into_iter().map(move |p| format!("wall{w}_{}", p.name())))
            .collect(),
        SafetyGeometry::Workspace(_) => vec!["ws_out".into(), "ws_in".into()],
    }
}

fn box_rows(x_seq: &[OuterState<f64>], u_seq: &[ControlInput<f64>], ctx: &MpcContext<'_>, rows: &mut Vec<Row>) {
    let b = &ctx.cfg.bounds;
    for (j, u) in u_seq.iter().enumerate() {
        for k in 0..INPUT_DIM {
            let flat = j * INPUT_DIM + k;
            rows.push(Row {
                kind: ConstraintKind::InputBox { step: j, index: k, upper: true },
                value: b.u_max[k] - u.0[k],
                state_grads: Vec::new(),
                input_grad: Some((flat, -1.0)),
            });
            rows.push(Row {
                kind: ConstraintKind::InputBox { step: j, index: k, upper: false },
                value: u.0[k] - b.u_min[k],
                state_grads: Vec::new(),
                input_grad: Some((flat, 1.0)),
            });
        }
    }
    let unit = |k: usize, s: f64| {
        let mut g = SVector::<f64, STATE_DIM>::zeros();
        g[k] = s;
        g
    };
    for (i, x) in x_seq.iter().enumerate().skip(1) {
        for k in 0..STATE_DIM {
            if b.x_max[k].is_finite() {
                rows.push(Row {
                    kind: ConstraintKind::StateBox { step: i, index: k, upper: true },
                    value: b.x_max[k] - x.0[k],
                    state_grads: vec![(i, unit(k, -1.0))],
                    input_grad: None,
                });
            }
            if b.x_min[k].is_finite() {
                rows.push(Row {
                    kind: ConstraintKind::StateBox { step: i, index: k, upper: false },
                    value: x.0[k] - b.x_min[k],
                    state_grads: vec![(i, unit(k, 1.0))],
                    input_grad: None,
                });
            }
        }
        let sum = x.0[8] + x.0[9];
        let grad = unit(8, 1.0) + unit(9, 1.0);
        rows.push(Row {
            kind: ConstraintKind::JointSum { step: i, upper: true },
            value: b.joint_sum_limit - sum,
            state_grads: vec![(i, -grad)],
            input_grad: None,
        });
        rows.push(Row {
            kind: ConstraintKind::JointSum { step: i, upper: false },
            value: sum + b.joint_sum_limit,
            state_grads: vec![(i, grad)],
            input_grad: None,
        });
    }
}

fn margins_of<T: crate::Real>(x: &OuterState<T>, step: usize, ctx: &MpcContext<'_>) -> Vec<T> {
    let params = ctx.params.cast::<T>();
    match ctx.geometry {
        SafetyGeometry::Free => Vec::new(),
        SafetyGeometry::Walls { walls, radii } => {
            let points = critical_points(x, &params, radii.map(c));
            walls
                .iter()
                .flat_map(|wall| points.iter().zip(radii).map(move |(p, r)| wall.signed_distance(&p.position) - c::<T>(wall.s_min().max(*r))))
                .collect()
        }
        SafetyGeometry::Workspace(sphere) => {
            let d = workspace_deviation(x, &ctx.refs[step].cast::<T>().position, sphere);
            let dist = if d.norm() < c(crate::blf::DEGENERATE_RADIUS) { T::zero() } else { d.norm() };
            vec![c::<T>(sphere.radius) - dist]
        }
    }
}

/// Position-level safety margins of one state, with gradients on request.
fn hard_margins(x: &OuterState<f64>, step: usize, ctx: &MpcContext<'_>, derivatives: bool) -> Vec<(f64, SVector<f64, STATE_DIM>)> {
    if derivatives {
        margins_of(&OuterState(ad::seed(&x.0)), step, ctx).iter().map(ad::split).collect()
    } else {
        margins_of(x, step, ctx).into_iter().map(|m| (m, SVector::zeros())).collect()
    }
}

/// Assembles every inequality row. With `derivatives` false the gradients
/// are left empty.
pub fn constraint_rows(x_seq: &[OuterState<f64>], u_seq: &[ControlInput<f64>], ctx: &MpcContext<'_>, derivatives: bool) -> Vec<Row> {
    let mut rows = Vec::new();
    box_rows(x_seq, u_seq, ctx, &mut rows);

    match ctx.cfg.variant {
        Variant::Naive | Variant::Sc => {}
        Variant::Hc => {
            for (i, x) in x_seq.iter().enumerate() {
                for (barrier, (value, grad)) in hard_margins(x, i, ctx, derivatives && i > 0).into_iter().enumerate() {
                    rows.push(Row {
                        kind: ConstraintKind::Hard { step: i, barrier },
                        value,
                        state_grads: if derivatives && i > 0 { vec![(i, grad)] } else { Vec::new() },
                        input_grad: None,
                    });
                }
            }
        }
        Variant::Blf => {
            let bp = &ctx.cfg.barrier;
            let dt = ctx.cfg.dt;
            let domain = Domain::Extended(ctx.cfg.barrier_extension);
            for (b, spec) in barrier_specs(ctx.geometry).iter().enumerate() {
                let values: Vec<Option<(f64, SVector<f64, STATE_DIM>)>> = x_seq
                    .iter()
                    .enumerate()
                    .map(|(i, x)| {
                        if derivatives && i > 0 {
                            spec.value(x, ctx.params, &ctx.refs[i], bp, domain).map(|v| (v.h, v.grad_x))
                        } else {
                            spec.evaluate(x, ctx.params, &ctx.refs[i], bp, domain).map(|v| (v.h, SVector::zeros()))
                        }
                    })
                    .map(|value| match value {
                        Ok(v) => Some(v),
                        Err(BarrierError::DegenerateCenter) => None,
                        Err(e) => unreachable!("extended barrier domain cannot fail: {e}"),
                    })
                    .collect();
                for i in 0..x_seq.len() - 1 {
                    let row = match (&values[i], &values[i + 1]) {
                        (Some((h0, g0)), Some((h1, g1))) => {
                            let value = (h1 - h0) / dt + bp.gamma * (signed_pow(*h0, bp.z) - bp.lambda);
                            let slope = if bp.z == 1.0 { 1.0 } else { bp.z * h0.abs().powf(bp.z - 1.0) };
                            let mut grads = Vec::new();
                            if derivatives {
                                if i > 0 {
                                    grads.push((i, g0 * (bp.gamma * slope - 1.0 / dt)));
                                }
                                grads.push((i + 1, g1 / dt));
                            }
                            (value, grads)
                        }
                        // The radial direction is undefined exactly at the
                        // center, where every direction is safe.
                        _ => (1.0, Vec::new()),
                    };
                    rows.push(Row { kind: ConstraintKind::Invariance { step: i, barrier: b }, value: row.0, state_grads: row.1, input_grad: None });
                }
            }
        }
    }
    rows
}

/// Constraint values only.
pub fn assemble_constraints(x_seq: &[OuterState<f64>], u_seq: &[ControlInput<f64>], ctx: &MpcContext<'_>) -> Vec<(ConstraintKind, f64)> {
    constraint_rows(x_seq, u_seq, ctx, false).into_iter().map(|r| (r.kind, r.value)).collect()
}
