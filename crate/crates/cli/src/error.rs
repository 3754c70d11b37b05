// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code for configuration and input-data errors.
pub const EXIT_CONFIG: i32 = 1;
/// Exit code for failures after the inputs were accepted.
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(#[from] edms_core::Error),
    #[error("{path}: {message}")]
    Artifact { path: PathBuf, message: String },
    #[error("run failed: {0}")]
    Runtime(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Data(_) | CliError::Artifact { .. } => EXIT_CONFIG,
            CliError::Runtime(_) | CliError::Write { .. } => EXIT_RUNTIME,
        }
    }

    pub(crate) fn artifact(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Artifact {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
