//! Simulation and benchmarking of an aerial manipulator (quadrotor with a
//! planar two-link arm) under a cascaded controller: an outer receding-horizon
//! optimizer with barrier-function safety constraints and an inner PID loop.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod ad;
pub mod blf;
pub mod dynamics;
pub mod inner_loop;
pub mod kinematics;
pub mod mpc;
mod error;
pub mod scalar;
pub mod sim;

pub use error::{ConfigError, DynamicsError};
pub use scalar::Real;

pub type AmParams = dynamics::AmParams<f64>;
pub type PlantState = dynamics::PlantState<f64>;
pub type LinkKinematics = dynamics::LinkKinematics<f64>;
pub type Wrench = dynamics::Wrench<f64>;
