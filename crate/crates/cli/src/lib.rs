//! Configuration and orchestration for quantum walk experiments.

pub mod config;
pub mod experiments;

pub use config::{validate_config, validate_with, ExperimentConfig, ExperimentKind, Overrides, ValidationErrors};
pub use experiments::{config_hash, run_experiment, RunError, RunOutcome};
