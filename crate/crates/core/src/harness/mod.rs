//! Configuration-driven experiments.

pub mod config;
pub mod experiment;
pub mod report;

pub use config::{Bandwidths, ConfigFile, ExperimentConfig, Mode};
pub use experiment::{
    run_consistency_experiment, run_pilot, run_recovery_demo, simulate_replicate, validate_sampler,
    ConvergenceReport, RecoveryReport, RungStats, SlopeFit,
};
pub use report::{run_experiment, ExperimentOutput};
