// SPDX-License-Identifier: MIT OR Apache-2.0

//! Average growth-rate forecaster.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::Series;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthMode {
    /// Mean period-over-period ratio, compounded forward.
    #[default]
    Multiplicative,
    /// Mean first difference, added forward.
    Additive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthParams {
    pub g: f64,
    pub last_value: f64,
    #[serde(default)]
    pub mode: GrowthMode,
}

pub fn fit_avg_growth(train: &Series, mode: GrowthMode) -> Result<GrowthParams> {
    train.ensure_len(2)?;
    let y = train.values();
    let g = match mode {
        GrowthMode::Multiplicative => {
            if let Some((index, &value)) = y.iter().enumerate().find(|(_, v)| **v <= 0.0) {
                return Err(Error::NonPositiveValue {
                    id: train.id().to_string(),
                    index,
                    value,
                });
            }
            y.windows(2).map(|w| w[1] / w[0]).sum::<f64>() / (y.len() - 1) as f64
        }
        GrowthMode::Additive => {
            y.windows(2).map(|w| w[1] - w[0]).sum::<f64>() / (y.len() - 1) as f64
        }
    };
    Ok(GrowthParams {
        g,
        last_value: train.last(),
        mode,
    })
}

/// Values for steps `offset + 1 ..= offset + h` after the last training point.
pub(crate) fn forecast_from(params: &GrowthParams, offset: usize, h: usize) -> Vec<f64> {
    (offset + 1..=offset + h)
        .map(|k| match params.mode {
            GrowthMode::Multiplicative => params.last_value * params.g.powi(k as i32),
            GrowthMode::Additive => params.last_value + k as f64 * params.g,
        })
        .collect()
}

pub fn forecast_avg_growth(params: &GrowthParams, h: usize) -> Vec<f64> {
    forecast_from(params, 0, h)
}
