// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{combine, compute_member_error, compute_weights, PerformanceReport, WeightMetric, WeightVector};
use crate::error::{Error, Result};
use crate::models::{fit_model, forecast_model, ForecasterKind, ModelConfig, TrainedModel};
use crate::seed::derive_seed;
use crate::timeseries::{split_train_test, Series, SplitSpec};

/// A labelled ensemble member. Labels key weights and audit records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Member {
    pub label: String,
    pub kind: ForecasterKind,
}

impl Member {
    pub fn new(label: impl Into<String>, kind: ForecasterKind) -> Self {
        Self {
            label: label.into(),
            kind,
        }
    }

    /// One member per kind, labelled by the kind name.
    pub fn from_kinds(kinds: &[ForecasterKind]) -> Vec<Member> {
        kinds.iter().map(|&k| Member::new(k.as_str(), k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundConfig {
    pub split: SplitSpec,
    pub metric: WeightMetric,
    pub model: ModelConfig,
    /// Base seed for this round; member seeds are derived from it.
    pub seed: u64,
}

impl Default for RoundConfig {
    fn default() -> Self {
        Self {
            split: SplitSpec::default(),
            metric: WeightMetric::Mae,
            model: ModelConfig::default(),
            seed: 0,
        }
    }
}

/// Models fitted outside the round (e.g. a panel-wide LSTM), used in
/// place of a per-series fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Prefit {
    pub performance: TrainedModel,
    pub full: TrainedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutput {
    pub working_length: usize,
    pub train_length: usize,
    pub test_length: usize,
    pub horizon: usize,
    pub report: PerformanceReport,
    pub weights: WeightVector,
    /// Member forecasts over the held-out segment.
    pub test_forecasts: BTreeMap<String, Vec<f64>>,
    /// Member forecasts from the 100% fit over the round horizon.
    pub member_forecasts: BTreeMap<String, Vec<f64>>,
    pub combined: Vec<f64>,
    #[serde(skip)]
    pub models: BTreeMap<String, TrainedModel>,
}

fn member_config(config: &RoundConfig, member: &Member, role: &str) -> ModelConfig {
    let mut model = config.model.clone();
    model.lstm.seed = derive_seed(config.seed, &[&member.label, role]);
    model
}

fn fit_member(
    member: &Member,
    train: &Series,
    config: &RoundConfig,
    role: &str,
    prefit: Option<&TrainedModel>,
) -> Result<TrainedModel> {
    let model = match prefit {
        Some(m) => {
            if m.kind() != member.kind || m.train_length != train.len() {
                return Err(Error::InvalidParameter(format!(
                    "prefit model for `{}` does not match its training segment",
                    member.label
                )));
            }
            m.clone()
        }
        None => fit_model(member.kind, train, &member_config(config, member, role))?,
    };
    Ok(model)
}

/// Relative size below which a held-out error is indistinguishable from
/// floating-point rounding of the data.
const PERFECT_FIT_TOLERANCE: f64 = 1e-10;

/// Zeroes errors at rounding level so exact members tie exactly.
fn snap_to_zero(err: f64, test: &[f64]) -> f64 {
    let scale = test.iter().map(|v| v.abs()).sum::<f64>() / test.len() as f64;
    if err <= PERFECT_FIT_TOLERANCE * scale.max(1.0) {
        0.0
    } else {
        err
    }
}

pub(crate) fn validate_members(members: &[Member]) -> Result<()> {
    if members.len() < 2 {
        return Err(Error::TooFewMembers(members.len()));
    }
    let mut seen = BTreeSet::new();
    for m in members {
        if !seen.insert(m.label.as_str()) {
            return Err(Error::InvalidParameter(format!(
                "duplicate member label `{}`",
                m.label
            )));
        }
    }
    Ok(())
}

/// One performance-weighted ensemble forecast of `horizon` steps.
///
/// Members are fitted on the train prefix of `series`, scored on the
/// held-out suffix, refitted on the full series, and their `horizon`-step
/// forecasts combined with the held-out weights.
pub fn ensemble_round(
    series: &Series,
    members: &[Member],
    horizon: usize,
    config: &RoundConfig,
    prefit: &BTreeMap<String, Prefit>,
) -> Result<RoundOutput> {
    validate_members(members)?;
    if horizon == 0 {
        return Err(Error::InvalidParameter("round horizon must be positive".into()));
    }
    let (train, test) = split_train_test(series, config.split)?;

    let mut test_forecasts = BTreeMap::new();
    let mut maes = BTreeMap::new();
    let mut member_forecasts = BTreeMap::new();
    let mut models = BTreeMap::new();
    for member in members {
        let wrap = |source: Error| Error::MemberFitFailure {
            member: member.label.clone(),
            source: Box::new(source),
        };
        let pre = prefit.get(&member.label);
        let perf = fit_member(member, &train, config, "performance", pre.map(|p| &p.performance))
            .map_err(wrap)?;
        let forecast = forecast_model(&perf, train.values(), test.len()).map_err(wrap)?;
        let err = snap_to_zero(
            compute_member_error(config.metric, &forecast, test.values()).map_err(wrap)?,
            test.values(),
        );
        if !forecast.iter().all(|v| v.is_finite()) || !err.is_finite() {
            return Err(wrap(Error::InvalidParameter("non-finite held-out forecast".into())));
        }

        let full = fit_member(member, series, config, "full", pre.map(|p| &p.full)).map_err(wrap)?;
        let production = forecast_model(&full, series.values(), horizon).map_err(wrap)?;
        if !production.iter().all(|v| v.is_finite()) {
            return Err(wrap(Error::InvalidParameter("non-finite forecast".into())));
        }

        maes.insert(member.label.clone(), err);
        test_forecasts.insert(member.label.clone(), forecast);
        member_forecasts.insert(member.label.clone(), production);
        models.insert(member.label.clone(), full);
    }

    let report = PerformanceReport {
        maes,
        horizon_used: test.len(),
    };
    let weights = compute_weights(&report)?;
    let combined = combine(&member_forecasts, &weights)?;
    Ok(RoundOutput {
        working_length: series.len(),
        train_length: train.len(),
        test_length: test.len(),
        horizon,
        report,
        weights,
        test_forecasts,
        member_forecasts,
        combined,
        models,
    })
}

impl RoundOutput {
    /// Seed used for a member's fit in this round.
    pub fn member_seed(config: &RoundConfig, label: &str, full: bool) -> u64 {
        derive_seed(config.seed, &[label, if full { "full" } else { "performance" }])
    }
}
