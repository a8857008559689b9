//! Scenarios, closed-loop episodes, metrics, logs and benchmark drivers.

pub mod bench;
mod config;
mod disturbance;
mod episode;
mod log;
mod metrics;
mod trajectory;

pub use config::{Case, Scenario, ScenarioConfig, SimConfig, WallLayout};
pub use disturbance::sample_disturbance;
pub use episode::run_episode;
pub use log::{AbortReason, EpisodeLog, LogRow, INPUT_COLUMNS, STATE_COLUMNS};
pub use metrics::{compute_metrics, Metrics, MetricsError, Outcome, SafetyLimits};
pub use trajectory::{generate_trajectory, TrajectoryPoint, TrajectorySpec};
