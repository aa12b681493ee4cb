// SPDX-License-Identifier: MIT OR Apache-2.0

use modalprobe::config::ConfigError;
use modalprobe::{MsuError, PairgenError, PcaError, TensorIoError, ToyError};
use thiserror::Error;

/// Exit status 1: the environment failed (missing files, permissions, disk).
pub const EXIT_IO: i32 = 1;
/// Exit status 2: inputs were readable but invalid.
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => EXIT_VALIDATION,
            Self::Io(_) => EXIT_IO,
        }
    }

    pub fn io(path: &std::path::Path, err: &std::io::Error) -> Self {
        Self::Io(format!("{}: {err}", path.display()))
    }
}

impl From<TensorIoError> for CliError {
    fn from(e: TensorIoError) -> Self {
        let message = format!("[{}] {e}", e.code());
        match e {
            // a run directory that is absent or incomplete is a bad input,
            // not a broken environment
            TensorIoError::Io { .. } => Self::Io(message),
            _ => Self::Validation(message),
        }
    }
}

impl From<PairgenError> for CliError {
    fn from(e: PairgenError) -> Self {
        if e.is_validation() {
            Self::Validation(e.to_string())
        } else {
            Self::Io(e.to_string())
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Read { .. } => Self::Io(e.to_string()),
            ConfigError::Parse { .. } => Self::Validation(e.to_string()),
        }
    }
}

impl From<MsuError> for CliError {
    fn from(e: MsuError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<PcaError> for CliError {
    fn from(e: PcaError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<ToyError> for CliError {
    fn from(e: ToyError) -> Self {
        match e {
            ToyError::Run(inner) => inner.into(),
            other => Self::Validation(other.to_string()),
        }
    }
}
