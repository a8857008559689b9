//! Command-line front end: single episodes, the controller benchmark, the
//! horizon and tightening sweep, and inner-loop gain tuning.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use amblf::inner_loop::tune_attitude;
use amblf::mpc::Variant;
use amblf::sim::bench::{format_ablation, format_benchmark, run_ablation, run_benchmark, write_ablation_csv, write_benchmark_csv, Cell};
use amblf::sim::{run_episode, AbortReason, Case, Outcome, SimConfig};
use amblf::ConfigError;
use anyhow::Context;
use clap::{Args, Parser, Subcommand};

/// Exit status when an episode violates a safety bound.
const EXIT_SAFETY: u8 = 2;
/// Exit status when the optimizer reports an infeasible step.
const EXIT_INFEASIBLE: u8 = 3;
/// Exit status for unreadable or inconsistent configuration.
const EXIT_CONFIG: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "amblf", version, about = "Aerial manipulator MPC simulation and benchmarking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ConfigArg {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<SimConfig, ConfigError> {
        match &self.config {
            Some(path) => SimConfig::load(path),
            None => Ok(SimConfig::default()),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one closed-loop episode and write its CSV log.
    Run {
        #[command(flatten)]
        config: ConfigArg,
        /// Controller: naive, hc, sc or blf.
        #[arg(long)]
        variant: Option<Variant>,
        /// Scenario: walls or workspace.
        #[arg(long)]
        case: Option<Case>,
        /// Disturbance amplitude in m/s²; 0 disables it.
        #[arg(long)]
        disturbance: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Episode CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every controller in both cases, with and without disturbance.
    Bench {
        #[command(flatten)]
        config: ConfigArg,
        /// Number of seeds per cell (seeds 0..N).
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, default_value = "bench_out")]
        out_dir: PathBuf,
    },
    /// Sweep horizon length and barrier tightening for the barrier controller.
    Ablate {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
        horizons: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,5")]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, default_value = "bench_out")]
        out_dir: PathBuf,
    },
    /// Grid-search the attitude gains and print them as a configuration
    /// section.
    TunePid {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, value_delimiter = ',', default_value = "20,30,45,67.5,100")]
        kps: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "3,5,8.1,12,16")]
        kds: Vec<f64>,
    },
}

fn write_outputs(dir: &Path, name: &str, csv: impl FnOnce(&mut Vec<u8>) -> Result<(), ConfigError>, text: &str) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut buf = Vec::new();
    csv(&mut buf)?;
    fs::write(dir.join(format!("{name}.csv")), buf)?;
    fs::write(dir.join(format!("{name}.txt")), text)?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Run { config, variant, case, disturbance, seed, out } => {
            let mut cfg = config.load()?;
            if let Some(v) = variant {
                cfg.mpc.variant = v;
            }
            if let Some(c) = case {
                cfg.scenario.case = c;
            }
            if let Some(d) = disturbance {
                cfg.scenario.disturbance = d;
                cfg.scenario.disturbed = d > 0.0;
            }
            let scenario = cfg.scenario()?;
            log::info!("running {} on {} with seed {seed}", scenario.variant().label(), scenario.case.label());
            let (log, m) = run_episode(&scenario, seed)?;
            if let Some(path) = out {
                log.save(&path)?;
            }
            println!("outcome     {}", m.outcome.name());
            println!("steps       {}/{}", m.steps, scenario.steps);
            println!("TE          {:.6}", m.te);
            println!("c_s         {:.6}", m.c_s);
            println!("c_e         {:.6}", m.c_e);
            if let Some(s) = m.min_clearance {
                println!("clearance   {s:.6}");
            }
            if let Some(d) = m.max_deviation {
                println!("deviation   {d:.6}");
            }
            if let Some(reason) = &log.abort {
                println!("aborted     {reason:?}");
            }
            Ok(match (m.outcome, &log.abort) {
                (Outcome::Completed, _) => 0,
                (Outcome::Collided, _) | (_, Some(AbortReason::Plant { .. })) => EXIT_SAFETY,
                _ => EXIT_INFEASIBLE,
            })
        }
        Command::Bench { config, seeds, out_dir } => {
            let cfg = config.load()?;
            let seeds: Vec<u64> = (0..seeds).collect();
            let results = run_benchmark(&cfg, &Cell::full_suite(), &seeds)?;
            let text = format_benchmark(&results);
            write_outputs(&out_dir, "benchmark", |b| write_benchmark_csv(&results, b), &text)?;
            print!("{text}");
            Ok(0)
        }
        Command::Ablate { config, horizons, lambdas, seeds, out_dir } => {
            let cfg = config.load()?;
            let seeds: Vec<u64> = (0..seeds).collect();
            let results = run_ablation(&cfg, &horizons, &lambdas, &seeds)?;
            let text = format_ablation(&results);
            write_outputs(&out_dir, "ablation", |b| write_ablation_csv(&results, b), &text)?;
            print!("{text}");
            Ok(0)
        }
        Command::TunePid { config, kps, kds } => {
            let cfg = config.load()?;
            let ranked = tune_attitude(&cfg.params, &cfg.gains, &kps, &kds);
            let best = ranked.first().ok_or_else(|| ConfigError::Invalid("no gain candidate produced a stable response".into()))?;
            println!("# settling {:.3} s, overshoot {:.1} %", best.response.settling_time, 100.0 * best.response.overshoot);
            println!("[gains.attitude]");
            println!("kp = {}", best.kp);
            println!("ki = {}", cfg.gains.attitude.ki);
            println!("kd = {}", best.kd);
            println!("integral_limit = {}", cfg.gains.attitude.integral_limit);
            println!("output_limit = {}", cfg.gains.attitude.output_limit);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
