// SPDX-License-Identifier: MIT OR Apache-2.0

//! The five ensemble members behind one fit/forecast interface.

mod growth;
mod holt;
mod lstm;
mod regression;

pub use growth::{fit_avg_growth, forecast_avg_growth, GrowthMode, GrowthParams};
pub use holt::{fit_holt, forecast_holt, holt_one_step_errors, holt_rss, HoltParams};
pub use lstm::{
    fit_lstm, fit_lstm_pooled, fit_lstm_with_history, forecast_lstm, loss_and_gradient,
    lstm_forward, mean_squared_error, train_windows, ForwardOutput, LstmParams,
    LstmTrainConfig, LstmWeights, Normalization, WindowSet,
};
pub use regression::{fit_regression, forecast_regression, RegressionParams};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::Series;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecasterKind {
    AvgGrowth,
    Linear,
    Polynomial,
    Holt,
    Lstm,
}

impl ForecasterKind {
    pub const ALL: [ForecasterKind; 5] = [
        ForecasterKind::AvgGrowth,
        ForecasterKind::Linear,
        ForecasterKind::Polynomial,
        ForecasterKind::Holt,
        ForecasterKind::Lstm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ForecasterKind::AvgGrowth => "avg_growth",
            ForecasterKind::Linear => "linear",
            ForecasterKind::Polynomial => "polynomial",
            ForecasterKind::Holt => "holt",
            ForecasterKind::Lstm => "lstm",
        }
    }
}

impl fmt::Display for ForecasterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ForecasterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ForecasterKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown model kind `{s}`")))
    }
}

/// Kind-specific fitted parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ModelParams {
    AvgGrowth(GrowthParams),
    Linear(RegressionParams),
    Polynomial(RegressionParams),
    Holt(HoltParams),
    Lstm(LstmParams),
}

impl ModelParams {
    pub fn kind(&self) -> ForecasterKind {
        match self {
            ModelParams::AvgGrowth(_) => ForecasterKind::AvgGrowth,
            ModelParams::Linear(_) => ForecasterKind::Linear,
            ModelParams::Polynomial(_) => ForecasterKind::Polynomial,
            ModelParams::Holt(_) => ForecasterKind::Holt,
            ModelParams::Lstm(_) => ForecasterKind::Lstm,
        }
    }
}

/// A fitted forecaster and the length of the series it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    #[serde(flatten)]
    pub params: ModelParams,
    pub train_length: usize,
}

impl TrainedModel {
    pub fn kind(&self) -> ForecasterKind {
        self.params.kind()
    }
}

/// Member hyperparameters shared by every fit in a run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelConfig {
    pub growth_mode: GrowthMode,
    pub lstm: LstmTrainConfig,
}

pub fn fit_model(kind: ForecasterKind, train: &Series, config: &ModelConfig) -> Result<TrainedModel> {
    let params = match kind {
        ForecasterKind::AvgGrowth => ModelParams::AvgGrowth(fit_avg_growth(train, config.growth_mode)?),
        ForecasterKind::Linear => ModelParams::Linear(fit_regression(train, 1)?),
        ForecasterKind::Polynomial => ModelParams::Polynomial(fit_regression(train, 2)?),
        ForecasterKind::Holt => ModelParams::Holt(fit_holt(train)?),
        ForecasterKind::Lstm => ModelParams::Lstm(fit_lstm(train, &config.lstm)?),
    };
    Ok(TrainedModel {
        params,
        train_length: train.len(),
    })
}

/// `h` forecasts following the end of `context`.
///
/// `context` is the training series, possibly extended by earlier
/// forecasts. Closed-form members evaluate their h-step expression shifted
/// by the extension length; the LSTM rolls one-step predictions forward.
pub fn forecast_model(model: &TrainedModel, context: &[f64], h: usize) -> Result<Vec<f64>> {
    if h == 0 {
        return Err(Error::InvalidParameter("forecast horizon must be positive".into()));
    }
    let offset = context
        .len()
        .checked_sub(model.train_length)
        .ok_or_else(|| Error::SeriesTooShort {
            id: "context".into(),
            needed: model.train_length,
            have: context.len(),
        })?;
    Ok(match &model.params {
        ModelParams::AvgGrowth(p) => growth::forecast_from(p, offset, h),
        ModelParams::Linear(p) | ModelParams::Polynomial(p) => {
            regression::forecast_from(p, model.train_length + offset, h)
        }
        ModelParams::Holt(p) => holt::forecast_from(p, offset, h),
        ModelParams::Lstm(p) => forecast_lstm(p, context, h)?,
    })
}

/// Audit record of a fitted model, sufficient to re-forecast without refitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub series_id: String,
    pub member: String,
    pub seed: u64,
    pub config: ModelConfig,
    pub model: TrainedModel,
}
