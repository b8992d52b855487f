//! Experiment harness behind the `chaosfs` binary: config files, batteries
//! of seeded runs, comparison tables, speedup benchmarks and synthetic data.

pub mod commands;
pub mod config;
pub mod synth;

use thiserror::Error;

pub use config::{DataFormat, DataSource, ExperimentConfig};
pub use synth::{generate, Sidecar, Synthetic, SyntheticSpec};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad config file, flag or argument.
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn runtime(message: impl std::fmt::Display) -> Self {
        CliError::Runtime(message.to_string())
    }

    /// 2 for config and validation failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}
