// SPDX-License-Identifier: MIT OR Apache-2.0

//! Experiment harness behind the `edms` binary: config parsing, the
//! `validate`/`run`/`report`/`synth` commands and their on-disk artifacts.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod suite;

pub use artifacts::Method;
pub use commands::{cmd_report, cmd_run, cmd_synth, cmd_validate, load_run, prepare};
pub use config::{parse_schedule, ExperimentConfig, Overrides};
pub use error::{CliError, Result, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME};

/// Sizes the global worker pool from `EDMS_THREADS`, if set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("EDMS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("EDMS_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))
}
