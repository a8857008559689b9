//! Closed-loop episode: outer optimizer at `t_s`, inner PID and plant at
//! `inner_dt`.

use std::time::Instant;

use nalgebra::{Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::Scenario;
use super::disturbance::sample_disturbance;
use super::log::{AbortReason, EpisodeLog, LogRow};
use super::metrics::{compute_metrics, Metrics, SafetyLimits};
use crate::blf::{BarrierError, Domain, StepReference};
use crate::dynamics::{integrate, PlantState};
use crate::error::ConfigError;
use crate::inner_loop::{acceleration_to_attitude, InnerController, InnerRefs};
use crate::kinematics::{critical_points, end_effector_state, workspace_deviation, PointId};
use crate::mpc::{barrier_names, barrier_specs, solve_step, ControlInput, HorizonSolution, OuterState, SafetyGeometry, Variant};

impl Scenario {
    pub fn limits(&self) -> SafetyLimits {
        match &self.geometry {
            SafetyGeometry::Walls { walls, radii } => SafetyLimits {
                clearance_bounds: walls.iter().flat_map(|w| radii.iter().map(move |r| w.s_min().max(*r))).collect(),
                radius: None,
                expected_steps: self.steps,
            },
            SafetyGeometry::Workspace(sphere) => SafetyLimits { clearance_bounds: Vec::new(), radius: Some(sphere.radius), expected_steps: self.steps },
            SafetyGeometry::Free => SafetyLimits { clearance_bounds: Vec::new(), radius: None, expected_steps: self.steps },
        }
    }

    fn clearance_names(&self) -> Vec<String> {
        match &self.geometry {
            SafetyGeometry::Walls { walls, .. } => {
                (0..walls.len()).flat_map(|w| PointId::ALL.map(|p| format!("wall{w}_{}", p.name()))).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Reference samples for an optimizer window starting at `t`.
    pub fn references(&self, t: f64) -> Vec<StepReference<f64>> {
        (0..=self.mpc.horizon)
            .map(|i| {
                let p = self.trajectory.at(t + i as f64 * self.mpc.dt);
                StepReference { position: p.position, velocity: p.velocity }
            })
            .collect()
    }
}

/// Inner setpoints at time `tau` into the outer step, following the
/// optimizer's plan from the measured state under the held input.
fn plan_setpoints(sc: &Scenario, x: &OuterState<f64>, u: &ControlInput<f64>, tau: f64) -> InnerRefs {
    let pos = |p: f64, v: f64, a: f64| p + v * tau + 0.5 * a * tau * tau;
    let rate = |v: f64, a: f64| v + a * tau;
    let xv = &x.0;
    let yaw = pos(xv[6], xv[7], u.0[3]);
    let mut refs = acceleration_to_attitude(&u.accel(), yaw, &sc.params);
    refs.yaw_rate = rate(xv[7], u.0[3]);
    refs.height = Some(pos(xv[2], xv[5], u.0[2]));
    refs.climb_rate = rate(xv[5], u.0[2]);
    refs.horizontal = Some(Vector2::new(pos(xv[0], xv[3], u.0[0]), pos(xv[1], xv[4], u.0[1])));
    refs.horizontal_rate = Vector2::new(rate(xv[3], u.0[0]), rate(xv[4], u.0[1]));
    for k in 0..2 {
        refs.joints[k] = pos(xv[8 + k], xv[10 + k], u.0[4 + k]);
        refs.joint_rates[k] = rate(xv[10 + k], u.0[4 + k]);
        refs.joint_accel[k] = u.0[4 + k];
    }
    refs
}

fn record(sc: &Scenario, t: f64, state: &PlantState<f64>, x: &OuterState<f64>, refs: &[StepReference<f64>], sol: &HorizonSolution, disturbance: Vector3<f64>) -> LogRow {
    let specs = barrier_specs(&sc.geometry);
    let domain = Domain::Extended(sc.mpc.barrier_extension);
    let barrier_h = specs
        .iter()
        .map(|s| match s.evaluate(x, &sc.params, &refs[0], &sc.mpc.barrier, domain) {
            Ok(v) => v.h,
            Err(BarrierError::DegenerateCenter) => f64::NAN,
            Err(BarrierError::InfeasibleGeometry { .. }) => f64::NEG_INFINITY,
        })
        .collect();
    let barrier_residual = if sc.variant() == Variant::Blf {
        sol.min_invariance_residuals(specs.len())
    } else {
        vec![f64::NAN; specs.len()]
    };
    let clearances = match &sc.geometry {
        SafetyGeometry::Walls { walls, radii } => {
            let points = critical_points(state, &sc.params, *radii);
            walls.iter().flat_map(|w| points.iter().map(move |p| w.signed_distance(&p.position))).collect()
        }
        _ => Vec::new(),
    };
    let deviation = match &sc.geometry {
        SafetyGeometry::Workspace(sphere) => workspace_deviation(state, &refs[0].position, sphere).norm(),
        _ => f64::NAN,
    };
    let (p_e, _) = end_effector_state(state, &sc.params);
    LogRow {
        t,
        state: x.0.into(),
        input: sol.u_seq[0].0.into(),
        end_effector: p_e.into(),
        reference: refs[0].position.into(),
        barrier_h,
        barrier_residual,
        clearances,
        deviation,
        status: sol.status,
        iterations: sol.iterations,
        kkt: sol.kkt_residual,
        disturbance: disturbance.into(),
    }
}

/// Runs one episode and scores it. Safety violations and solver failures are
/// part of the result; only an inconsistent scenario is an error.
pub fn run_episode(sc: &Scenario, seed: u64) -> Result<(EpisodeLog, Metrics), ConfigError> {
    sc.mpc.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ctl = InnerController::new(sc.gains);
    let mut state = sc.initial;
    let mut warm: Option<HorizonSolution> = None;
    let mut log = EpisodeLog { barrier_names: barrier_names(&sc.geometry), clearance_names: sc.clearance_names(), ..Default::default() };

    'outer: for k in 0..sc.steps {
        let t = k as f64 * sc.t_s;
        let x = OuterState::from_plant(&state);
        let refs = sc.references(t);
        let start = Instant::now();
        let sol = solve_step(&x, &refs, &sc.mpc, &sc.geometry, &sc.params, warm.as_ref())
            .map_err(|e| ConfigError::Invalid(format!("optimizer rejected the problem at step {k}: {e}")))?;
        log.solve_times.push(start.elapsed().as_secs_f64());
        let disturbance = sample_disturbance(&mut rng, sc.d_m);
        log.rows.push(record(sc, t, &state, &x, &refs, &sol, disturbance));
        if !sol.status.accepted() && sc.stop_on_infeasible {
            log.abort = Some(AbortReason::Infeasible { step: k });
            break;
        }

        let u = sol.u_seq[0];
        for j in 0..sc.inner_steps {
            let setpoints = plan_setpoints(sc, &x, &u, j as f64 * sc.inner_dt);
            let cmd = ctl.step(&state, &setpoints, &sc.params, sc.inner_dt);
            match integrate(&sc.params, &state, &cmd.actuators(disturbance), sc.inner_dt) {
                Ok(out) => state = out.state,
                Err(e) => {
                    log.abort = Some(AbortReason::Plant { step: k, message: e.to_string() });
                    break 'outer;
                }
            }
        }
        warm = Some(sol);
    }
    let metrics = compute_metrics(&log, &sc.limits()).expect("the first step is always logged");
    Ok((log, metrics))
}
