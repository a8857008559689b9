//! Sequential quadratic programming for small dense problems with inequality
//! constraints `c(x) ≥ 0`.
//!
//! Each iteration solves a QP built from a damped-BFGS Lagrangian Hessian and
//! the linearized constraints, falling back to an elastic QP (one shared
//! slack) when the linearization is inconsistent. Steps are globalized with an
//! ℓ1 merit function and Armijo backtracking.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::qp::{solve_qp, QpError};

/// Function values, plus first derivatives when requested.
#[derive(Debug, Clone)]
pub struct NlpEval {
    pub objective: f64,
    pub constraints: DVector<f64>,
    pub gradient: Option<DVector<f64>>,
    /// `m × n` constraint Jacobian.
    pub jacobian: Option<DMatrix<f64>>,
}

pub trait NlpProblem {
    fn dim(&self) -> usize;

    fn evaluate(&self, x: &DVector<f64>, derivatives: bool) -> NlpEval;

    /// Starting Hessian approximation; must be symmetric.
    fn initial_hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim())
    }

    /// Whether row `i` may be relaxed by the elastic fallback. Rows that can
    /// always be met on their own (simple bounds) should return false.
    fn relaxable(&self, _i: usize) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqpOptions {
    pub max_iter: usize,
    /// Largest acceptable constraint violation.
    pub constraint_tol: f64,
    /// Step-length threshold for convergence, relative to `1 + ‖x‖∞`.
    pub step_tol: f64,
    /// Diagonal shift keeping the Hessian positive definite.
    pub regularization: f64,
    /// Linear penalty on the elastic slack.
    pub elastic_penalty: f64,
    pub armijo: f64,
    pub min_step: f64,
    /// Stationarity tolerance on the Lagrangian gradient, relative to
    /// `1 + ‖∇f‖∞`.
    pub kkt_tol: f64,
}

impl Default for SqpOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            constraint_tol: 1e-6,
            step_tol: 1e-8,
            regularization: 1e-6,
            elastic_penalty: 1e4,
            armijo: 1e-4,
            min_step: 1e-10,
            kkt_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverStatus {
    Converged,
    /// Stopped early (iteration cap or stalled line search) but holding a
    /// feasible iterate.
    MaxIter,
    Infeasible,
}

impl SolverStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolverStatus::Converged => "converged",
            SolverStatus::MaxIter => "max_iter",
            SolverStatus::Infeasible => "infeasible",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "converged" => Some(SolverStatus::Converged),
            "max_iter" => Some(SolverStatus::MaxIter),
            "infeasible" => Some(SolverStatus::Infeasible),
            _ => None,
        }
    }

    pub fn accepted(self) -> bool {
        self != SolverStatus::Infeasible
    }
}

/// Merit values around one accepted step, both under the same penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeritStep {
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone)]
pub struct SqpResult {
    pub x: DVector<f64>,
    pub objective: f64,
    pub constraints: DVector<f64>,
    pub multipliers: DVector<f64>,
    pub status: SolverStatus,
    pub iterations: usize,
    /// Infinity norm of the Lagrangian gradient at the final iterate of the
    /// iteration loop.
    pub kkt_residual: f64,
    pub merit_history: Vec<MeritStep>,
}

fn violation(c: &DVector<f64>) -> f64 {
    c.iter().map(|v| (-v).max(0.0)).sum()
}

fn max_violation(c: &DVector<f64>) -> f64 {
    c.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max)
}

fn regularized(h: &DMatrix<f64>, shift: f64) -> DMatrix<f64> {
    let n = h.nrows();
    let sym = (h + h.transpose()) * 0.5;
    let mut delta = shift;
    loop {
        let candidate = &sym + DMatrix::identity(n, n) * delta;
        if candidate.clone().cholesky().is_some() {
            return candidate;
        }
        delta = (delta * 10.0).max(1e-8);
    }
}

struct Step {
    p: DVector<f64>,
    multipliers: DVector<f64>,
}

/// Elastic QP: one slack `t ≥ 0` added to every relaxable row, priced
/// linearly (plus a tiny quadratic term to keep the problem strictly convex).
fn elastic_step<P: NlpProblem + ?Sized>(
    problem: &P,
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    jac: &DMatrix<f64>,
    c: &DVector<f64>,
    opts: &SqpOptions,
) -> Option<Step> {
    let n = g.len();
    let m = c.len();
    let mut hh = DMatrix::zeros(n + 1, n + 1);
    hh.view_mut((0, 0), (n, n)).copy_from(h);
    hh[(n, n)] = 1e-6;
    let mut gg = DVector::zeros(n + 1);
    gg.rows_mut(0, n).copy_from(g);
    gg[n] = opts.elastic_penalty;
    let mut cc = DMatrix::zeros(m + 1, n + 1);
    cc.view_mut((0, 0), (m, n)).copy_from(jac);
    for i in 0..m {
        if problem.relaxable(i) {
            cc[(i, n)] = 1.0;
        }
    }
    cc[(m, n)] = 1.0;
    let mut cv = DVector::zeros(m + 1);
    cv.rows_mut(0, m).copy_from(c);
    let sol = solve_qp(&hh, &gg, &cc, &cv).ok()?;
    Some(Step { p: sol.x.rows(0, n).into_owned(), multipliers: sol.multipliers.rows(0, m).into_owned() })
}

pub fn solve<P: NlpProblem + ?Sized>(problem: &P, x0: &DVector<f64>, opts: &SqpOptions) -> SqpResult {
    let mut x = x0.clone();
    let mut ev = problem.evaluate(&x, true);
    let h0 = regularized(&problem.initial_hessian(&x), opts.regularization);
    let mut h = h0.clone();
    let mut rho = 1.0;
    let mut lambda = DVector::zeros(ev.constraints.len());
    let mut merit_history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    let feasible = |c: &DVector<f64>| max_violation(c) <= opts.constraint_tol;
    let mut best: Option<(DVector<f64>, NlpEval)> = feasible(&ev.constraints).then(|| (x.clone(), ev.clone()));

    while iterations < opts.max_iter {
        iterations += 1;
        let g = ev.gradient.clone().expect("derivatives requested");
        let jac = ev.jacobian.clone().expect("derivatives requested");
        let c = &ev.constraints;

        let step = match solve_qp(&h, &g, &jac, c) {
            Ok(sol) => Some(Step { p: sol.x, multipliers: sol.multipliers }),
            Err(QpError::NotConvex) => {
                h = h0.clone();
                continue;
            }
            Err(_) => elastic_step(problem, &h, &g, &jac, c, opts),
        };
        let Some(Step { p, multipliers }) = step else { break };
        lambda = multipliers;

        let viol0 = violation(c);
        let x_scale = 1.0 + x.amax();
        let stationarity = (&g - jac.transpose() * &lambda).amax();
        let complementarity = lambda.iter().zip(c.iter()).map(|(l, v)| (l * v).abs()).fold(0.0, f64::max);
        let kkt_ok = stationarity <= opts.kkt_tol * (1.0 + g.amax()) && complementarity <= opts.kkt_tol * (1.0 + ev.objective.abs());
        if feasible(c) && (p.amax() <= opts.step_tol * x_scale || kkt_ok) {
            converged = true;
            break;
        }

        let lin = c + &jac * &p;
        let lin_viol = violation(&lin);
        rho = f64::max(rho, 1.5 * lambda.amax() + 1e-3);
        let phi0 = ev.objective + rho * viol0;
        let slope = g.dot(&p) - rho * (viol0 - lin_viol);
        if slope >= 0.0 {
            // Not a descent direction for the merit; restart curvature.
            if h == h0 {
                break;
            }
            h = h0.clone();
            continue;
        }

        let mut alpha = 1.0;
        let accepted = loop {
            let trial = &x + &p * alpha;
            let tev = problem.evaluate(&trial, false);
            let phi = tev.objective + rho * violation(&tev.constraints);
            if phi.is_finite() && phi <= phi0 + opts.armijo * alpha * slope {
                break Some((trial, phi));
            }
            alpha *= 0.5;
            if alpha < opts.min_step {
                break None;
            }
        };
        let Some((x_new, phi)) = accepted else { break };
        merit_history.push(MeritStep { before: phi0, after: phi });

        let ev_new = problem.evaluate(&x_new, true);
        let grad_lag = |e: &NlpEval| -> DVector<f64> {
            e.gradient.as_ref().unwrap() - e.jacobian.as_ref().unwrap().transpose() * &lambda
        };
        let s = &x_new - &x;
        let mut y = grad_lag(&ev_new) - grad_lag(&ev);
        let hs = &h * &s;
        let shs = s.dot(&hs);
        let sy = s.dot(&y);
        if shs > 0.0 {
            if sy < 0.2 * shs {
                let theta = 0.8 * shs / (shs - sy);
                y = &y * theta + &hs * (1.0 - theta);
            }
            let sy = s.dot(&y);
            if sy > 0.0 {
                h += &y * y.transpose() / sy - &hs * hs.transpose() / shs;
            }
        }

        x = x_new;
        ev = ev_new;
        if feasible(&ev.constraints) && best.as_ref().is_none_or(|(_, b)| ev.objective <= b.objective) {
            best = Some((x.clone(), ev.clone()));
        }
        if (phi0 - phi).abs() <= 1e-12 * (1.0 + phi0.abs()) && feasible(&ev.constraints) {
            converged = true;
            break;
        }
    }

    let kkt_residual = match (&ev.gradient, &ev.jacobian) {
        (Some(g), Some(j)) if lambda.len() == j.nrows() => (g - j.transpose() * &lambda).amax(),
        _ => f64::NAN,
    };
    if converged {
        return SqpResult {
            x,
            objective: ev.objective,
            constraints: ev.constraints,
            multipliers: lambda,
            status: SolverStatus::Converged,
            iterations,
            kkt_residual,
            merit_history,
        };
    }
    match best {
        Some((bx, bev)) => SqpResult {
            x: bx,
            objective: bev.objective,
            constraints: bev.constraints,
            multipliers: lambda,
            status: SolverStatus::MaxIter,
            iterations,
            kkt_residual,
            merit_history,
        },
        None => SqpResult {
            x,
            objective: ev.objective,
            constraints: ev.constraints,
            multipliers: lambda,
            status: SolverStatus::Infeasible,
            iterations,
            kkt_residual,
            merit_history,
        },
    }
}
