//! The horizon optimization as a generic nonlinear program over the stacked
//! input sequence `U ∈ R^{6n}`.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};

use super::constraints::{constraint_rows, Row};
use super::cost::{stage_residuals, MpcContext};
use super::sqp::{NlpEval, NlpProblem};
use super::{predict, ControlInput, Model, OuterState, INPUT_DIM, STATE_DIM};
use crate::ad;

pub struct HorizonProblem<'a> {
    pub x0: OuterState<f64>,
    pub model: Model<f64>,
    pub ctx: MpcContext<'a>,
    /// `∂x_i/∂U` for `i = 0..=n`; constant because the model is linear.
    sensitivities: Vec<DMatrix<f64>>,
    relaxable: Vec<bool>,
}

impl<'a> HorizonProblem<'a> {
    pub fn new(x0: OuterState<f64>, ctx: MpcContext<'a>) -> Self {
        let n = ctx.cfg.horizon;
        let model = super::discretize(ctx.cfg.dt);
        let dim = n * INPUT_DIM;
        let mut sensitivities = Vec::with_capacity(n + 1);
        let mut s = DMatrix::<f64>::zeros(STATE_DIM, dim);
        sensitivities.push(s.clone());
        for j in 0..n {
            let mut next = DMatrix::zeros(STATE_DIM, dim);
            next.view_mut((0, 0), (STATE_DIM, j * INPUT_DIM)).copy_from(&(model.a * s.view((0, 0), (STATE_DIM, j * INPUT_DIM))));
            next.view_mut((0, j * INPUT_DIM), (STATE_DIM, INPUT_DIM)).copy_from(&model.b);
            sensitivities.push(next.clone());
            s = next;
        }
        let mut problem = Self { x0, model, ctx, sensitivities, relaxable: Vec::new() };
        let probe = problem.inputs(&DVector::zeros(dim));
        let states = predict(&x0, &probe, &model);
        problem.relaxable = constraint_rows(&states, &probe, &ctx, false).iter().map(|r| r.kind.relaxable()).collect();
        problem
    }

    pub fn inputs(&self, u: &DVector<f64>) -> Vec<ControlInput<f64>> {
        (0..self.ctx.cfg.horizon)
            .map(|j| ControlInput(SVector::<f64, INPUT_DIM>::from_column_slice(&u.as_slice()[j * INPUT_DIM..(j + 1) * INPUT_DIM])))
            .collect()
    }

    pub fn states(&self, u: &DVector<f64>) -> Vec<OuterState<f64>> {
        predict(&self.x0, &self.inputs(u), &self.model)
    }

    pub fn rows(&self, u: &DVector<f64>, derivatives: bool) -> Vec<Row> {
        constraint_rows(&self.states(u), &self.inputs(u), &self.ctx, derivatives)
    }

    fn effort(&self, flat: usize) -> f64 {
        self.ctx.cfg.weights.effort[flat % INPUT_DIM]
    }

    /// Gauss–Newton curvature of the least-squares cost.
    fn gauss_newton(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let dim = self.dim();
        let mut h = DMatrix::zeros(dim, dim);
        for (i, x) in self.states(u).iter().enumerate().skip(1) {
            let res = stage_residuals(&OuterState(ad::seed(&x.0)), i, &self.ctx);
            let mut jtj = SMatrix::<f64, STATE_DIM, STATE_DIM>::zeros();
            for (_, r) in &res {
                let (_, g) = ad::split(r);
                jtj += g * g.transpose() * 2.0;
            }
            let s = &self.sensitivities[i];
            h += s.transpose() * jtj * s;
        }
        h
    }
}

impl NlpProblem for HorizonProblem<'_> {
    fn dim(&self) -> usize {
        self.ctx.cfg.horizon * INPUT_DIM
    }

    fn evaluate(&self, u: &DVector<f64>, derivatives: bool) -> NlpEval {
        let dim = self.dim();
        let inputs = self.inputs(u);
        let states = predict(&self.x0, &inputs, &self.model);

        let mut objective = 0.0;
        let mut gradient = DVector::zeros(if derivatives { dim } else { 0 });
        for (i, x) in states.iter().enumerate() {
            if derivatives && i > 0 {
                let mut gx = SVector::<f64, STATE_DIM>::zeros();
                for (_, r) in stage_residuals(&OuterState(ad::seed(&x.0)), i, &self.ctx) {
                    let (v, g) = ad::split(&r);
                    objective += v * v;
                    gx += g * (2.0 * v);
                }
                gradient += self.sensitivities[i].transpose() * gx;
            } else {
                objective += stage_residuals(x, i, &self.ctx).iter().map(|(_, r)| r * r).sum::<f64>();
            }
        }

        for k in 0..dim {
            let w = self.effort(k);
            objective += w * u[k] * u[k];
            if derivatives {
                gradient[k] += 2.0 * w * u[k];
            }
        }

        let rows = constraint_rows(&states, &inputs, &self.ctx, derivatives);
        let constraints = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.value));
        let jacobian = derivatives.then(|| {
            let mut jac = DMatrix::zeros(rows.len(), dim);
            for (k, row) in rows.iter().enumerate() {
                for (i, g) in &row.state_grads {
                    let contrib = g.transpose() * &self.sensitivities[*i];
                    let mut target = jac.row_mut(k);
                    target += contrib;
                }
                if let Some((idx, coeff)) = row.input_grad {
                    jac[(k, idx)] += coeff;
                }
            }
            jac
        });
        NlpEval { objective, constraints, gradient: derivatives.then_some(gradient), jacobian }
    }

    fn initial_hessian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let mut h = self.gauss_newton(u);
        for k in 0..self.dim() {
            h[(k, k)] += 2.0 * self.effort(k);
        }
        h
    }

    fn relaxable(&self, i: usize) -> bool {
        self.relaxable.get(i).copied().unwrap_or(true)
    }
}
