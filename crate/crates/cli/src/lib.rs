//! Experiment driver for `cocycle-bundle-core`: key = value configs, JSON
//! reports, CSV dumps and parameter sweeps.

pub mod cli;
pub mod config;
pub mod dump;
pub mod pipeline;
pub mod sweep;

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use cocycle_core::Error as CoreError;
use thiserror::Error;

pub use config::{ConfigError, ExperimentConfig};
pub use pipeline::{run, Mode, Run, RunReport};

/// Process exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(CoreError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl RunError {
    pub fn config(e: impl fmt::Display) -> Self {
        Self::Config(e.to_string())
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            _ => EXIT_FAIL,
        }
    }
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Uncovered(_) | CoreError::InvalidCovering(_) | CoreError::GridTooCoarse(_) => Self::config(e),
            e => Self::Core(e),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        Self::config(e)
    }
}
