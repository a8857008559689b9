//! Episode scoring: tracking error, control effort and smoothness, and the
//! safety outcome.

use nalgebra::Vector3;
use thiserror::Error;

use super::log::EpisodeLog;
use crate::mpc::SolverStatus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("episode log has no rows")]
    EmptyLog,
}

/// Benchmark flag of one episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    /// Ran to the end without violating the safety bound.
    Completed,
    /// Violated a wall margin or left the workspace.
    Collided,
    /// Stopped early without a safety violation.
    Incomplete,
}

impl Outcome {
    pub fn symbol(self) -> &'static str {
        match self {
            Outcome::Completed => "✓",
            Outcome::Collided => "×",
            Outcome::Incomplete => "*",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::Collided => "collided",
            Outcome::Incomplete => "incomplete",
        }
    }
}

/// Safety bounds the log is judged against.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyLimits {
    /// Lower bound on each logged clearance column.
    pub clearance_bounds: Vec<f64>,
    /// Workspace radius, when the deviation column is meaningful.
    pub radius: Option<f64>,
    /// Number of outer steps in a full episode.
    pub expected_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub outcome: Outcome,
    pub completed: bool,
    /// Steps with a safety violation.
    pub violation_steps: usize,
    pub steps: usize,
    /// End-effector RMS tracking error (m).
    pub te: f64,
    /// Mean squared input norm per step.
    pub c_e: f64,
    /// Mean summed absolute input change per step.
    pub c_s: f64,
    pub min_clearance: Option<f64>,
    pub max_deviation: Option<f64>,
    /// Smallest invariance residual among accepted solutions.
    pub min_invariance_residual: Option<f64>,
    /// Mean wall-clock solve time per outer step (s); zero when unknown.
    pub mean_solve_time: f64,
}

impl Metrics {
    /// Equality of everything that is reproducible from the CSV, i.e. all
    /// fields except the solve time.
    pub fn same_results(&self, other: &Metrics) -> bool {
        Metrics { mean_solve_time: 0.0, ..self.clone() } == Metrics { mean_solve_time: 0.0, ..other.clone() }
    }
}

fn fold_opt(acc: Option<f64>, v: f64, pick: fn(f64, f64) -> f64) -> Option<f64> {
    if v.is_nan() {
        acc
    } else {
        Some(acc.map_or(v, |a| pick(a, v)))
    }
}

pub fn compute_metrics(log: &EpisodeLog, limits: &SafetyLimits) -> Result<Metrics, MetricsError> {
    let n = log.rows.len();
    if n == 0 {
        return Err(MetricsError::EmptyLog);
    }
    let mut sq_err = 0.0;
    let mut c_e = 0.0;
    let mut c_s = 0.0;
    let mut violation_steps = 0;
    let mut min_clearance = None;
    let mut max_deviation = None;
    let mut min_residual = None;
    for (k, row) in log.rows.iter().enumerate() {
        sq_err += (Vector3::from(row.end_effector) - Vector3::from(row.reference)).norm_squared();
        c_e += row.input.iter().map(|u| u * u).sum::<f64>();
        if k > 0 {
            c_s += row.input.iter().zip(&log.rows[k - 1].input).map(|(a, b)| (a - b).abs()).sum::<f64>();
        }
        let mut violated = false;
        for (s, bound) in row.clearances.iter().zip(&limits.clearance_bounds) {
            min_clearance = fold_opt(min_clearance, *s, f64::min);
            violated |= s < bound;
        }
        if let Some(r) = limits.radius {
            max_deviation = fold_opt(max_deviation, row.deviation, f64::max);
            violated |= row.deviation > r;
        }
        violation_steps += usize::from(violated);
        if row.status.accepted() {
            for v in &row.barrier_residual {
                min_residual = fold_opt(min_residual, *v, f64::min);
            }
        }
    }
    let stopped = n < limits.expected_steps || log.abort.is_some() || log.rows.iter().any(|r| r.status == SolverStatus::Infeasible);
    let outcome = if violation_steps > 0 {
        Outcome::Collided
    } else if stopped {
        Outcome::Incomplete
    } else {
        Outcome::Completed
    };
    let mean_solve_time = if log.solve_times.is_empty() { 0.0 } else { log.solve_times.iter().sum::<f64>() / log.solve_times.len() as f64 };
    Ok(Metrics {
        outcome,
        completed: outcome == Outcome::Completed,
        violation_steps,
        steps: n,
        te: (sq_err / n as f64).sqrt(),
        c_e: c_e / n as f64,
        c_s: c_s / n as f64,
        min_clearance,
        max_deviation,
        min_invariance_residual: min_residual,
        mean_solve_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::log::LogRow;
    use approx::assert_relative_eq;

    fn row(input: [f64; 6], error: f64) -> LogRow {
        LogRow {
            t: 0.0,
            state: [0.0; 12],
            input,
            end_effector: [error, 0.0, 1.0],
            reference: [0.0, 0.0, 1.0],
            barrier_h: vec![],
            barrier_residual: vec![],
            clearances: vec![],
            deviation: f64::NAN,
            status: SolverStatus::Converged,
            iterations: 1,
            kkt: 0.0,
            disturbance: [0.0; 3],
        }
    }

    fn limits(n: usize) -> SafetyLimits {
        SafetyLimits { clearance_bounds: vec![], radius: None, expected_steps: n }
    }

    #[test]
    fn constant_error_gives_that_rms() {
        let log = EpisodeLog { rows: (0..10).map(|_| row([0.0; 6], 0.1)).collect(), ..Default::default() };
        let m = compute_metrics(&log, &limits(10)).unwrap();
        assert_relative_eq!(m.te, 0.1, epsilon = 1e-15);
        assert_eq!(m.outcome, Outcome::Completed);
    }

    #[test]
    fn constant_input_is_perfectly_smooth() {
        let u = [0.3, -0.2, 0.1, 0.0, 1.0, -1.0];
        let log = EpisodeLog { rows: (0..10).map(|_| row(u, 0.0)).collect(), ..Default::default() };
        assert_eq!(compute_metrics(&log, &limits(10)).unwrap().c_s, 0.0);
    }

    #[test]
    fn two_step_hand_example() {
        let log = EpisodeLog { rows: vec![row([0.0; 6], 0.0), row([1.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.0)], ..Default::default() };
        let m = compute_metrics(&log, &limits(2)).unwrap();
        // Unnormalized sums are both 1 over two steps.
        assert_eq!((m.c_e * 2.0, m.c_s * 2.0), (1.0, 1.0));
    }

    #[test]
    fn empty_log_is_an_error() {
        assert_eq!(compute_metrics(&EpisodeLog::default(), &limits(1)), Err(MetricsError::EmptyLog));
    }

    #[test]
    fn safety_and_completion_flags() {
        let mut rows: Vec<LogRow> = (0..4).map(|_| row([0.0; 6], 0.0)).collect();
        for (r, s) in rows.iter_mut().zip([0.3, 0.2, 0.15, 0.12]) {
            r.clearances = vec![s];
        }
        let lim = SafetyLimits { clearance_bounds: vec![0.1], radius: None, expected_steps: 4 };
        let log = EpisodeLog { rows: rows.clone(), ..Default::default() };
        let m = compute_metrics(&log, &lim).unwrap();
        assert_eq!((m.outcome, m.min_clearance), (Outcome::Completed, Some(0.12)));

        rows[3].clearances = vec![0.05];
        let m = compute_metrics(&EpisodeLog { rows: rows.clone(), ..Default::default() }, &lim).unwrap();
        assert_eq!((m.outcome, m.violation_steps), (Outcome::Collided, 1));

        rows[3].clearances = vec![0.2];
        rows.truncate(3);
        let m = compute_metrics(&EpisodeLog { rows, ..Default::default() }, &lim).unwrap();
        assert_eq!(m.outcome, Outcome::Incomplete);
    }
}
