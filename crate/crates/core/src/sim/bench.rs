//! Benchmark and ablation drivers: many episodes on a worker pool, averaged
//! per cell and written as CSV and aligned text.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use super::config::{Case, SimConfig};
use super::episode::run_episode;
use super::metrics::{Metrics, Outcome};
use crate::error::ConfigError;
use crate::mpc::Variant;

/// One benchmark configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub variant: Variant,
    pub case: Case,
    pub disturbed: bool,
}

impl Cell {
    /// Every variant in every case, with and without disturbance.
    pub fn full_suite() -> Vec<Cell> {
        let mut out = Vec::new();
        for case in Case::ALL {
            for disturbed in [false, true] {
                for variant in Variant::ALL {
                    out.push(Cell { variant, case, disturbed });
                }
            }
        }
        out
    }
}

/// Metrics of one cell averaged over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub seeds: usize,
    pub completed: usize,
    pub collided: usize,
    pub te: f64,
    pub c_e: f64,
    pub c_s: f64,
    pub mean_solve_time: f64,
    /// Per-seed metrics in seed order.
    pub runs: Vec<Metrics>,
}

impl CellSummary {
    fn from_runs(runs: Vec<Metrics>) -> Self {
        let n = runs.len() as f64;
        let mean = |f: fn(&Metrics) -> f64| runs.iter().map(f).sum::<f64>() / n;
        Self {
            seeds: runs.len(),
            completed: runs.iter().filter(|m| m.outcome == Outcome::Completed).count(),
            collided: runs.iter().filter(|m| m.outcome == Outcome::Collided).count(),
            te: mean(|m| m.te),
            c_e: mean(|m| m.c_e),
            c_s: mean(|m| m.c_s),
            mean_solve_time: mean(|m| m.mean_solve_time),
            runs,
        }
    }

    /// Cell flag: completed only if every seed completed, collided if any
    /// seed violated safety, incomplete otherwise.
    pub fn outcome(&self) -> Outcome {
        if self.completed == self.seeds {
            Outcome::Completed
        } else if self.collided > 0 {
            Outcome::Collided
        } else {
            Outcome::Incomplete
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cell: Cell,
    pub summary: CellSummary,
}

fn run_seeds(jobs: Vec<(usize, SimConfig)>, seeds: &[u64]) -> Result<Vec<Vec<Metrics>>, ConfigError> {
    if seeds.is_empty() {
        return Err(ConfigError::Invalid("at least one seed is required".into()));
    }
    let scenarios = jobs.iter().map(|(_, cfg)| cfg.scenario()).collect::<Result<Vec<_>, _>>()?;
    let tasks: Vec<(usize, u64)> = (0..scenarios.len()).flat_map(|i| seeds.iter().map(move |s| (i, *s))).collect();
    let metrics = tasks
        .par_iter()
        .map(|&(i, seed)| run_episode(&scenarios[i], seed).map(|(_, m)| m))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(metrics.chunks(seeds.len()).map(<[Metrics]>::to_vec).collect())
}

/// Runs every cell for every seed. Cells override the case, variant and
/// disturbance flag of `base`; everything else is shared.
pub fn run_benchmark(base: &SimConfig, cells: &[Cell], seeds: &[u64]) -> Result<Vec<CellResult>, ConfigError> {
    let jobs = cells
        .iter()
        .enumerate()
        .map(|(i, cell)| {
            let mut cfg = base.clone();
            cfg.scenario.case = cell.case;
            cfg.scenario.disturbed = cell.disturbed;
            cfg.mpc.variant = cell.variant;
            (i, cfg)
        })
        .collect();
    let runs = run_seeds(jobs, seeds)?;
    Ok(cells.iter().zip(runs).map(|(cell, runs)| CellResult { cell: *cell, summary: CellSummary::from_runs(runs) }).collect())
}

/// One point of the horizon and tightening sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationResult {
    pub horizon: usize,
    /// Tightening in the configured units.
    pub lambda: f64,
    pub summary: CellSummary,
}

/// Runs the barrier variant of `base` over every (horizon, λ) pair.
pub fn run_ablation(base: &SimConfig, horizons: &[usize], lambdas: &[f64], seeds: &[u64]) -> Result<Vec<AblationResult>, ConfigError> {
    let points: Vec<(usize, f64)> = horizons.iter().flat_map(|n| lambdas.iter().map(move |l| (*n, *l))).collect();
    let jobs = points
        .iter()
        .enumerate()
        .map(|(i, (n, l))| {
            let mut cfg = base.clone();
            cfg.mpc.variant = Variant::Blf;
            cfg.mpc.horizon = *n;
            cfg.mpc.barrier.lambda = *l;
            (i, cfg)
        })
        .collect();
    let runs = run_seeds(jobs, seeds)?;
    Ok(points.into_iter().zip(runs).map(|((horizon, lambda), runs)| AblationResult { horizon, lambda, summary: CellSummary::from_runs(runs) }).collect())
}

const SUMMARY_HEADER: [&str; 8] = ["completed", "seeds", "flag", "te", "c_s", "c_e", "collided", "solve_time_s"];

fn summary_fields(s: &CellSummary) -> Vec<String> {
    vec![
        s.completed.to_string(),
        s.seeds.to_string(),
        s.outcome().name().to_string(),
        format!("{:.6}", s.te),
        format!("{:.6}", s.c_s),
        format!("{:.6}", s.c_e),
        s.collided.to_string(),
        format!("{:.6}", s.mean_solve_time),
    ]
}

/// Benchmark grid as CSV, one row per cell.
pub fn write_benchmark_csv<W: Write>(results: &[CellResult], out: W) -> Result<(), ConfigError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["case", "disturbed", "variant"].into_iter().chain(SUMMARY_HEADER))?;
    for r in results {
        let mut rec = vec![r.cell.case.name().to_string(), r.cell.disturbed.to_string(), r.cell.variant.name().to_string()];
        rec.extend(summary_fields(&r.summary));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Ablation grid as CSV, one row per (horizon, λ).
pub fn write_ablation_csv<W: Write>(results: &[AblationResult], out: W) -> Result<(), ConfigError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["horizon", "lambda"].into_iter().chain(SUMMARY_HEADER))?;
    for r in results {
        let mut rec = vec![r.horizon.to_string(), r.lambda.to_string()];
        rec.extend(summary_fields(&r.summary));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Row label and formatter of one summary metric.
type MetricRow = (&'static str, fn(&CellSummary) -> String);

fn aligned(header: &[String], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).chain([header[c].chars().count()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

/// Benchmark grid laid out with cases and disturbance settings as column
/// groups and controllers as row groups.
pub fn format_benchmark(results: &[CellResult]) -> String {
    let mut groups: Vec<(Case, bool)> = Vec::new();
    for r in results {
        if !groups.contains(&(r.cell.case, r.cell.disturbed)) {
            groups.push((r.cell.case, r.cell.disturbed));
        }
    }
    let mut header = vec!["controller".to_string(), "metric".to_string()];
    header.extend(groups.iter().map(|(case, d)| format!("{} {}", case.label(), if *d { "dist" } else { "nominal" })));
    let mut variants: Vec<Variant> = Vec::new();
    for r in results {
        if !variants.contains(&r.cell.variant) {
            variants.push(r.cell.variant);
        }
    }
    let metrics: [MetricRow; 4] = [
        ("flag", |s| format!("{} {}/{}", s.outcome().symbol(), s.completed, s.seeds)),
        ("TE", |s| format!("{:.4}", s.te)),
        ("c_s", |s| format!("{:.4}", s.c_s)),
        ("c_e", |s| format!("{:.4}", s.c_e)),
    ];
    let mut rows = Vec::new();
    for v in variants {
        for (name, f) in &metrics {
            let mut row = vec![v.label().to_string(), name.to_string()];
            for g in &groups {
                let cell = results.iter().find(|r| r.cell.variant == v && (r.cell.case, r.cell.disturbed) == *g);
                row.push(cell.map_or_else(|| "-".to_string(), |r| f(&r.summary)));
            }
            rows.push(row);
        }
    }
    aligned(&header, &rows)
}

/// Ablation grid with one column per (horizon, λ).
pub fn format_ablation(results: &[AblationResult]) -> String {
    let mut header = vec!["metric".to_string()];
    header.extend(results.iter().map(|r| format!("n={} λ={}", r.horizon, r.lambda)));
    let metrics: [MetricRow; 5] = [
        ("flag", |s| format!("{} {}/{}", s.outcome().symbol(), s.completed, s.seeds)),
        ("TE", |s| format!("{:.4}", s.te)),
        ("c_s", |s| format!("{:.4}", s.c_s)),
        ("c_e", |s| format!("{:.4}", s.c_e)),
        ("solve time (s)", |s| format!("{:.4}", s.mean_solve_time)),
    ];
    let rows: Vec<Vec<String>> = metrics
        .iter()
        .map(|(name, f)| std::iter::once(name.to_string()).chain(results.iter().map(|r| f(&r.summary))).collect())
        .collect();
    aligned(&header, &rows)
}
