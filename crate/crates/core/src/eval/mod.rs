// SPDX-License-Identifier: MIT OR Apache-2.0

//! Average MAPE comparison of EIMS and EDMS forecasts.

mod report;

pub use report::{parse_report_csv, render_report, render_report_csv, render_report_text, ReportFormat, ReportRow};

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::Frequency;

const DENOMINATOR_EPS: f64 = 1e-9;

/// Which value divides the absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapeDenominator {
    /// The forecast value, as in the comparison methodology.
    #[default]
    Forecast,
    /// The observed value (textbook MAPE).
    Actual,
}

impl FromStr for MapeDenominator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forecast" => Ok(MapeDenominator::Forecast),
            "actual" => Ok(MapeDenominator::Actual),
            other => Err(Error::InvalidParameter(format!(
                "unknown MAPE denominator `{other}`"
            ))),
        }
    }
}

/// Mean absolute percentage error of one series, as a fraction.
pub fn series_mape(forecast: &[f64], actual: &[f64], mode: MapeDenominator) -> Result<f64> {
    if forecast.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: forecast.len(),
            right: actual.len(),
        });
    }
    if forecast.is_empty() {
        return Err(Error::EmptyInput);
    }
    let denominators = match mode {
        MapeDenominator::Forecast => forecast,
        MapeDenominator::Actual => actual,
    };
    let bad: Vec<usize> = denominators
        .iter()
        .enumerate()
        .filter(|(_, d)| d.abs() < DENOMINATOR_EPS)
        .map(|(i, _)| i + 1)
        .collect();
    if !bad.is_empty() {
        return Err(Error::NearZeroDenominator(bad));
    }
    let total: f64 = forecast
        .iter()
        .zip(actual)
        .zip(denominators)
        .map(|((f, a), d)| ((f - a) / d).abs())
        .sum();
    Ok(total / forecast.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapeResult {
    pub per_series: BTreeMap<String, f64>,
    pub dataset_average: f64,
    pub denominator_mode: MapeDenominator,
}

/// Unweighted mean of per-series MAPEs.
pub fn dataset_average_mape(
    per_series: BTreeMap<String, f64>,
    denominator_mode: MapeDenominator,
) -> Result<MapeResult> {
    if per_series.is_empty() {
        return Err(Error::EmptyInput);
    }
    let dataset_average = per_series.values().sum::<f64>() / per_series.len() as f64;
    Ok(MapeResult {
        per_series,
        dataset_average,
        denominator_mode,
    })
}

/// Relative reduction of average MAPE, in percent. Positive means the
/// retrained method is more accurate.
pub fn delta_percent(mape_ims: f64, mape_dms: f64) -> Result<f64> {
    if !(mape_ims > 0.0) {
        return Err(Error::ZeroBaseline);
    }
    Ok(100.0 * (mape_ims - mape_dms) / mape_ims)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub dataset: String,
    pub frequency: Frequency,
    pub n_series: usize,
    pub total_size: usize,
    pub test_size: usize,
    pub eims: MapeResult,
    pub edms: MapeResult,
    /// `None` when the EIMS baseline is exactly zero.
    pub delta_percent: Option<f64>,
}

impl ComparisonReport {
    /// Builds the report over the series both methods forecast.
    #[allow(clippy::too_many_arguments)]
    pub fn compare(
        dataset: impl Into<String>,
        frequency: Frequency,
        total_size: usize,
        test_size: usize,
        actual: &BTreeMap<String, Vec<f64>>,
        eims: &BTreeMap<String, Vec<f64>>,
        edms: &BTreeMap<String, Vec<f64>>,
        mode: MapeDenominator,
    ) -> Result<Self> {
        let mut eims_mape = BTreeMap::new();
        let mut edms_mape = BTreeMap::new();
        for (id, y) in actual {
            let (Some(a), Some(b)) = (eims.get(id), edms.get(id)) else {
                continue;
            };
            eims_mape.insert(id.clone(), series_mape(a, y, mode)?);
            edms_mape.insert(id.clone(), series_mape(b, y, mode)?);
        }
        let eims = dataset_average_mape(eims_mape, mode)?;
        let edms = dataset_average_mape(edms_mape, mode)?;
        Ok(Self {
            dataset: dataset.into(),
            frequency,
            n_series: eims.per_series.len(),
            total_size,
            test_size,
            delta_percent: delta_percent(eims.dataset_average, edms.dataset_average).ok(),
            eims,
            edms,
        })
    }

    pub fn row(&self) -> ReportRow {
        ReportRow {
            dataset: self.dataset.clone(),
            n_series: Some(self.n_series),
            total_size: Some(self.total_size),
            test_size: Some(self.test_size),
            eims_mape: Some(self.eims.dataset_average),
            edms_mape: Some(self.edms.dataset_average),
            delta_percent: self.delta_percent,
        }
    }
}
