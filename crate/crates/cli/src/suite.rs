// SPDX-License-Identifier: MIT OR Apache-2.0

//! Bundled synthetic datasets with ready-to-run configs.

use std::path::{Path, PathBuf};

use edms_core::synth::{generate, SynthKind, SynthSpec};
use edms_core::timeseries::{render_wide_csv, CsvLayout, Frequency};

use crate::artifacts::write_text;
use crate::config::{DataConfig, ExperimentConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEntry {
    pub name: String,
    pub spec: SynthSpec,
    pub horizon: usize,
}

/// Three small panels, one per non-daily frequency, nine series in all.
pub fn bundled_suite(seed: u64) -> Vec<SuiteEntry> {
    let entry = |name: &str, kind, n, len, freq, horizon, salt: u64| SuiteEntry {
        name: name.to_string(),
        spec: SynthSpec::new(kind, n, len, freq, seed.wrapping_add(salt)),
        horizon,
    };
    vec![
        entry("trend-break-annual", SynthKind::TrendBreak, 3, 48, Frequency::Annual, 12, 0),
        entry("geometric-quarterly", SynthKind::Geometric, 3, 96, Frequency::Quarterly, 24, 1),
        entry("trend-break-monthly", SynthKind::TrendBreak, 3, 240, Frequency::Monthly, 72, 2),
    ]
}

/// Config for running one synthetic CSV with default settings.
pub fn synth_config(dataset: &str, data_file: &Path, frequency: Frequency, seed: u64) -> ExperimentConfig {
    ExperimentConfig::new(
        dataset,
        seed,
        DataConfig {
            path: data_file.to_path_buf(),
            layout: CsvLayout::Wide,
            frequency,
        },
    )
}

/// Writes `<name>.csv` and `<name>.toml` per suite entry; returns the config paths.
pub fn write_suite(dir: &Path, entries: &[SuiteEntry], seed: u64) -> Result<Vec<PathBuf>> {
    let mut configs = Vec::with_capacity(entries.len());
    for e in entries {
        let csv_name = format!("{}.csv", e.name);
        write_text(&dir.join(&csv_name), &render_wide_csv(&generate(&e.spec)?)?)?;
        let mut config = synth_config(&e.name, Path::new(&csv_name), e.spec.frequency, seed);
        config.run.horizon = Some(e.horizon);
        config.out = Some(PathBuf::from("runs").join(&e.name));
        let text = toml::to_string(&config).map_err(|e| CliError::Runtime(e.to_string()))?;
        let path = dir.join(format!("{}.toml", e.name));
        write_text(&path, &text)?;
        configs.push(path);
    }
    Ok(configs)
}
