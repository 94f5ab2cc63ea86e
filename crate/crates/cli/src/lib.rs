//! Experiment driver for `apnc-core`: configuration files, SNR sweeps written
//! as CSV with JSON manifests, diversity fits and analytic DMT curves.

pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use apnc_core::ApncError;
use thiserror::Error;

pub use commands::{cmd_analytic, cmd_compare, cmd_dmt, cmd_sweep, AnalyticOptions, DmtOptions, RunOptions};
pub use config::{ConfigError, ExperimentConfig, LawKind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Invalid(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Schema(String),
    #[error("{0}")]
    InsufficientData(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// Process exit status: 2 configuration/input, 3 I/O, 4 insufficient data.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Invalid(_) | CliError::Schema(_) => 2,
            CliError::Io { .. } => 3,
            CliError::InsufficientData(_) => 4,
        }
    }
}

impl From<ApncError> for CliError {
    fn from(e: ApncError) -> Self {
        match e {
            ApncError::InsufficientData { .. } => CliError::InsufficientData(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<config::ConfigErrorOrIo> for CliError {
    fn from(e: config::ConfigErrorOrIo) -> Self {
        match e {
            config::ConfigErrorOrIo::Config(c) => CliError::Config(c),
            config::ConfigErrorOrIo::Io(path, source) => CliError::Io { path, source },
        }
    }
}
