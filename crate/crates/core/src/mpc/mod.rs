//! Outer receding-horizon controller.

mod config;
pub mod constraints;
pub mod cost;
pub mod model;
mod problem;
pub mod qp;
pub mod sqp;

pub use config::{Bounds, MpcConfig, SafetyGeometry, Variant, Weights};
pub use constraints::{assemble_constraints, barrier_names, barrier_specs, ConstraintKind};
pub use cost::{effort_cost, evaluate_cost, CostBreakdown, MpcContext};
pub use model::{discretize, predict, ControlInput, Model, OuterState, INPUT_DIM, STATE_DIM};
pub use problem::HorizonProblem;
pub use sqp::{MeritStep, SolverStatus};

use nalgebra::DVector;
use thiserror::Error;

use crate::blf::StepReference;
use crate::dynamics::AmParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MpcError {
    #[error("warm start has horizon {got}, expected {expected}")]
    HorizonMismatch { expected: usize, got: usize },
    #[error("expected {expected} reference points, got {got}")]
    ReferenceLength { expected: usize, got: usize },
    #[error("measured state is not finite")]
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct HorizonSolution {
    pub u_seq: Vec<ControlInput<f64>>,
    /// `n + 1` predicted states starting at the measured one.
    pub x_seq: Vec<OuterState<f64>>,
    pub cost: CostBreakdown,
    pub constraint_residuals: Vec<(ConstraintKind, f64)>,
    pub status: SolverStatus,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub merit_history: Vec<MeritStep>,
}

impl HorizonSolution {
    /// Smallest invariance residual over the horizon for each barrier, in
    /// [`barrier_specs`] order.
    pub fn min_invariance_residuals(&self, barriers: usize) -> Vec<f64> {
        let mut out = vec![f64::INFINITY; barriers];
        for (kind, value) in &self.constraint_residuals {
            if let ConstraintKind::Invariance { barrier, .. } = kind {
                out[*barrier] = out[*barrier].min(*value);
            }
        }
        out
    }

    pub fn max_violation(&self) -> f64 {
        self.constraint_residuals.iter().map(|(_, v)| (-v).max(0.0)).fold(0.0, f64::max)
    }

    /// Previous solution shifted by one step, repeating the last input.
    pub fn shifted_inputs(&self) -> Vec<ControlInput<f64>> {
        let mut u: Vec<_> = self.u_seq.iter().skip(1).copied().collect();
        u.push(*self.u_seq.last().expect("horizon is at least one step"));
        u
    }
}

fn stack(u: &[ControlInput<f64>]) -> DVector<f64> {
    DVector::from_iterator(u.len() * INPUT_DIM, u.iter().flat_map(|c| c.0.iter().copied()))
}

/// Solves one receding-horizon problem from the measured state `x_k`.
///
/// The solve starts from the shifted warm start when one is given, else from
/// zero inputs. If no feasible iterate is found it is retried once from zero
/// inputs before reporting [`SolverStatus::Infeasible`].
pub fn solve_step(
    x_k: &OuterState<f64>,
    refs: &[StepReference<f64>],
    cfg: &MpcConfig,
    geometry: &SafetyGeometry,
    params: &AmParams<f64>,
    warm: Option<&HorizonSolution>,
) -> Result<HorizonSolution, MpcError> {
    let n = cfg.horizon;
    if !x_k.0.iter().all(|v| v.is_finite()) {
        return Err(MpcError::NonFinite);
    }
    if refs.len() != n + 1 {
        return Err(MpcError::ReferenceLength { expected: n + 1, got: refs.len() });
    }
    if let Some(w) = warm {
        if w.u_seq.len() != n {
            return Err(MpcError::HorizonMismatch { expected: n, got: w.u_seq.len() });
        }
    }

    let ctx = MpcContext { params, cfg, geometry, refs };
    let problem = HorizonProblem::new(*x_k, ctx);
    let zero = DVector::zeros(n * INPUT_DIM);
    let start = warm.map(|w| stack(&w.shifted_inputs())).unwrap_or_else(|| zero.clone());
    let mut result = sqp::solve(&problem, &start, &cfg.solver);
    if result.status == SolverStatus::Infeasible && warm.is_some() {
        let retry = sqp::solve(&problem, &zero, &cfg.solver);
        if retry.status.accepted() {
            result = retry;
        }
    }

    let u_seq = problem.inputs(&result.x);
    let x_seq = problem.states(&result.x);
    let cost = evaluate_cost(&x_seq, &u_seq, &ctx);
    let constraint_residuals = assemble_constraints(&x_seq, &u_seq, &ctx);
    Ok(HorizonSolution {
        u_seq,
        x_seq,
        cost,
        constraint_residuals,
        status: result.status,
        iterations: result.iterations,
        kkt_residual: result.kkt_residual,
        merit_history: result.merit_history,
    })
}
