//! Config-driven experiment runner for the rough-pdo laboratory.

pub mod baselines;
pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use experiments::{list_experiments, plan, run, validate, Plan, EXPERIMENTS};
pub use report::{Assertion, RunReport, SCHEMA_VERSION};
