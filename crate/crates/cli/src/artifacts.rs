// SPDX-License-Identifier: MIT OR Apache-2.0

//! On-disk run artifacts. Every file written here has a matching reader.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use edms_core::eval::MapeDenominator;
use edms_core::models::ModelSnapshot;
use edms_core::pipeline::ForecastRun;
use edms_core::timeseries::Frequency;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";
pub const PANEL: &str = "panel.json";
pub const FORECASTS: &str = "forecasts.csv";
pub const ACTUALS: &str = "actuals.csv";
pub const WEIGHTS: &str = "weights.csv";
pub const ROUNDS: &str = "rounds.json";
pub const MODELS: &str = "models.json";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_TEXT: &str = "report.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Eims,
    Edms,
    Both,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Eims => "eims",
            Method::Edms => "edms",
            Method::Both => "both",
        }
    }

    pub fn runs_eims(self) -> bool {
        self != Method::Edms
    }

    pub fn runs_edms(self) -> bool {
        self != Method::Eims
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eims" => Ok(Method::Eims),
            "edms" => Ok(Method::Edms),
            "both" => Ok(Method::Both),
            other => Err(format!("unknown method `{other}` (expected eims, edms or both)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedSeries {
    pub id: String,
    pub reason: String,
}

/// Outcome of load, align and prune.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSummary {
    pub dataset: String,
    pub frequency: Frequency,
    pub raw_series: usize,
    pub cutoff: usize,
    pub n_series: usize,
    pub length: usize,
    pub series: Vec<String>,
    pub dropped: Vec<DroppedSeries>,
    /// Median relative Holt one-step error, when pruning ran.
    pub median_fit_error: Option<f64>,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub dataset: String,
    pub frequency: Frequency,
    pub method: Method,
    pub total_length: usize,
    pub history_length: usize,
    pub horizon: usize,
    pub schedule: Vec<usize>,
    pub seed: u64,
    pub mape_denominator: MapeDenominator,
    pub panel_fingerprint: String,
    /// `ok`, or the failure message per method.
    pub series_status: BTreeMap<String, BTreeMap<String, String>>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub series_id: String,
    pub step: usize,
    pub eims_value: Option<f64>,
    pub edms_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActualRow {
    pub series_id: String,
    pub step: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub method: Method,
    pub series_id: String,
    pub stage: usize,
    pub first_step: usize,
    pub last_step: usize,
    pub working_length: usize,
    pub member: String,
    pub error: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub step: usize,
    pub actual: f64,
    pub eims: f64,
    pub edms: f64,
}

/// Per-stage audit for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAudit {
    pub method: Method,
    pub run: ForecastRun,
}

/// Final-stage member model of one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub method: Method,
    pub stage: usize,
    #[serde(flatten)]
    pub snapshot: ModelSnapshot,
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| CliError::Write {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::artifact(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::artifact(path, e))
}

pub fn render_csv<T: Serialize>(rows: &[T], header: &[&str]) -> Result<String> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Runtime(e.to_string());
    wtr.write_record(header).map_err(err)?;
    for row in rows {
        wtr.serialize(row).map_err(err)?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    write_text(path, &render_csv(rows, header)?)
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::artifact(path, e))?;
    rdr.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| CliError::artifact(path, e))
}

pub const FORECAST_HEADER: &[&str] = &["series_id", "step", "eims_value", "edms_value"];
pub const ACTUAL_HEADER: &[&str] = &["series_id", "step", "value"];
pub const WEIGHT_HEADER: &[&str] = &[
    "method",
    "series_id",
    "stage",
    "first_step",
    "last_step",
    "working_length",
    "member",
    "error",
    "weight",
];
pub const PLOT_HEADER: &[&str] = &["step", "actual", "eims", "edms"];

/// Groups step-indexed rows into per-series vectors, checking that steps
/// run `1..=n` without gaps.
pub fn by_series<T, F>(path: &Path, rows: &[T], key: F) -> Result<BTreeMap<String, Vec<f64>>>
where
    F: Fn(&T) -> (&str, usize, Option<f64>),
{
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for row in rows {
        let (id, step, value) = key(row);
        let Some(value) = value else { continue };
        let values = out.entry(id.to_string()).or_default();
        if step != values.len() + 1 {
            return Err(CliError::artifact(
                path,
                format!("series `{id}`: expected step {}, found {step}", values.len() + 1),
            ));
        }
        values.push(value);
    }
    Ok(out)
}
