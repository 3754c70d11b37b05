// SPDX-License-Identifier: MIT OR Apache-2.0

//! Experiment configuration (TOML).
//!
//! ```toml
//! dataset = "trend-break-monthly"
//! seed = 7
//!
//! [data]
//! path = "trend-break-monthly.csv"
//! layout = "wide"
//! frequency = "monthly"
//!
//! [run]
//! members = ["avg_growth", "linear", "polynomial", "holt", "lstm"]
//! horizon = 72
//!
//! [lstm]
//! hidden_size = 16
//! epochs = 200
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use edms_core::ensemble::{Member, RoundConfig, WeightMetric};
use edms_core::eval::MapeDenominator;
use edms_core::models::{ForecasterKind, GrowthMode, LstmTrainConfig, ModelConfig};
use edms_core::pipeline::{RetrainSchedule, RunConfig};
use edms_core::timeseries::{CsvLayout, CsvSchema, Frequency, SplitSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: String,
    #[serde(default)]
    pub seed: u64,
    /// Output directory for `run`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub data: DataConfig,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub lstm: LstmSection,
    #[serde(skip)]
    base_dir: PathBuf,
    #[serde(skip)]
    from_cli_out: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: PathBuf,
    #[serde(default = "default_layout")]
    pub layout: CsvLayout,
    pub frequency: Frequency,
}

fn default_layout() -> CsvLayout {
    CsvLayout::Wide
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub members: Vec<ForecasterKind>,
    /// Retrain steps; the frequency default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<usize>>,
    /// Explicit horizon; otherwise `test_fraction` of the aligned length.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    pub test_fraction: f64,
    pub train_fraction: f64,
    pub weight_metric: WeightMetric,
    pub mape_denominator: MapeDenominator,
    pub growth_mode: GrowthMode,
    pub global_lstm: bool,
    pub prune: bool,
    pub prune_threshold: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            members: ForecasterKind::ALL.to_vec(),
            schedule: None,
            horizon: None,
            test_fraction: 0.3,
            train_fraction: SplitSpec::default().train_fraction,
            weight_metric: WeightMetric::Mae,
            mape_denominator: MapeDenominator::Forecast,
            growth_mode: GrowthMode::Multiplicative,
            global_lstm: false,
            prune: true,
            prune_threshold: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LstmSection {
    pub hidden_size: usize,
    /// Window length; the frequency default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lookback: Option<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub gate_bias: bool,
}

impl Default for LstmSection {
    fn default() -> Self {
        let d = LstmTrainConfig::default();
        Self {
            hidden_size: d.hidden_size,
            lookback: None,
            epochs: d.epochs,
            learning_rate: d.learning_rate,
            gate_bias: d.gate_bias,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub schedule: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub mape_denominator: Option<MapeDenominator>,
    pub global_lstm: bool,
    pub additive_growth: bool,
    pub out: Option<PathBuf>,
}

/// Parses `--schedule`: comma-separated steps, or `none` / empty for no retraining.
pub fn parse_schedule(text: &str) -> std::result::Result<Vec<usize>, String> {
    let text = text.trim();
    if text.is_empty() || text.eq_ignore_ascii_case("none") {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad schedule step `{}`: {e}", p.trim()))
        })
        .collect()
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<String>, seed: u64, data: DataConfig) -> Self {
        Self {
            dataset: dataset.into(),
            seed,
            out: None,
            data,
            run: RunSection::default(),
            lstm: LstmSection::default(),
            base_dir: PathBuf::new(),
            from_cli_out: false,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    /// Reads a config file, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config =
            Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.base_dir = base.to_path_buf();
        Ok(config)
    }

    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.dataset.trim().is_empty() {
            return bad("dataset name is empty".into());
        }
        let run = &self.run;
        if run.members.len() < 2 {
            return bad(format!("at least 2 members are required, got {}", run.members.len()));
        }
        for (i, m) in run.members.iter().enumerate() {
            if run.members[..i].contains(m) {
                return bad(format!("member `{m}` listed twice"));
            }
        }
        if !(run.test_fraction > 0.0 && run.test_fraction < 1.0) {
            return bad(format!("test_fraction must lie in (0, 1), got {}", run.test_fraction));
        }
        if !(run.train_fraction > 0.0 && run.train_fraction < 1.0) {
            return bad(format!("train_fraction must lie in (0, 1), got {}", run.train_fraction));
        }
        if run.horizon == Some(0) {
            return bad("horizon must be positive".into());
        }
        if !(run.prune_threshold.is_finite() && run.prune_threshold > 0.0) {
            return bad(format!("prune_threshold must be positive, got {}", run.prune_threshold));
        }
        if let Some(steps) = &run.schedule {
            RetrainSchedule::new(steps.clone()).map_err(|e| CliError::Config(e.to_string()))?;
        }
        let l = &self.lstm;
        if l.hidden_size == 0 || l.epochs == 0 || l.lookback == Some(0) {
            return bad("lstm hidden_size, lookback and epochs must be positive".into());
        }
        if !(l.learning_rate.is_finite() && l.learning_rate > 0.0) {
            return bad(format!("lstm learning_rate must be positive, got {}", l.learning_rate));
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = &o.schedule {
            self.run.schedule = Some(s.clone());
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(m) = o.mape_denominator {
            self.run.mape_denominator = m;
        }
        if o.global_lstm {
            self.run.global_lstm = true;
        }
        if o.additive_growth {
            self.run.growth_mode = GrowthMode::Additive;
        }
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
            self.from_cli_out = true;
        }
        self.check()
    }

    pub fn data_path(&self) -> PathBuf {
        self.base_dir.join(&self.data.path)
    }

    /// Output directory, if any was configured.
    pub fn out_dir(&self) -> Option<PathBuf> {
        self.out.as_ref().map(|o| {
            if o.is_absolute() || self.from_cli_out {
                o.clone()
            } else {
                self.base_dir.join(o)
            }
        })
    }

    pub fn schema(&self) -> CsvSchema {
        CsvSchema {
            layout: self.data.layout,
            frequency: self.data.frequency,
        }
    }

    pub fn schedule(&self) -> Result<RetrainSchedule> {
        match &self.run.schedule {
            Some(steps) => {
                RetrainSchedule::new(steps.clone()).map_err(|e| CliError::Config(e.to_string()))
            }
            None => Ok(RetrainSchedule::default_for(self.data.frequency)),
        }
    }

    /// Horizon for a panel of aligned length `length`.
    pub fn horizon(&self, length: usize) -> usize {
        self.run
            .horizon
            .unwrap_or_else(|| ((self.run.test_fraction * length as f64).round() as usize).max(1))
    }

    pub fn lstm_config(&self) -> LstmTrainConfig {
        LstmTrainConfig {
            hidden_size: self.lstm.hidden_size,
            lookback: self
                .lstm
                .lookback
                .unwrap_or_else(|| self.data.frequency.default_lookback()),
            epochs: self.lstm.epochs,
            learning_rate: self.lstm.learning_rate,
            gate_bias: self.lstm.gate_bias,
            ..LstmTrainConfig::default()
        }
    }

    pub fn run_config(&self, horizon: usize) -> Result<RunConfig> {
        Ok(RunConfig {
            horizon,
            schedule: self.schedule()?,
            members: Member::from_kinds(&self.run.members),
            round: RoundConfig {
                split: SplitSpec {
                    train_fraction: self.run.train_fraction,
                },
                metric: self.run.weight_metric,
                model: ModelConfig {
                    growth_mode: self.run.growth_mode,
                    lstm: self.lstm_config(),
                },
                seed: self.seed,
            },
            global_lstm: self.run.global_lstm,
        })
    }
}
