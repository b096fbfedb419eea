//! Experiment orchestration for the opdmin simulator: configuration,
//! paired repetitions, sweeps and curvature diagnostics, all emitting CSV.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod stats;
pub mod sweeps;

pub use config::{Algorithm, ExperimentArgs, ExperimentConfig};
pub use error::{CliError, CliResult};
