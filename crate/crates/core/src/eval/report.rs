// SPDX-License-Identifier: MIT OR Apache-2.0

//! Comparison tables: one per frequency, rows per dataset, trailing
//! average-delta row.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ComparisonReport;
use crate::error::{Error, Result};
use crate::timeseries::Frequency;

pub const AVERAGE_LABEL: &str = "Average";

/// One CSV line of a comparison table. The average row leaves every
/// column but `dataset` and `delta_percent` empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub n_series: Option<usize>,
    pub total_size: Option<usize>,
    pub test_size: Option<usize>,
    pub eims_mape: Option<f64>,
    pub edms_mape: Option<f64>,
    pub delta_percent: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Text,
}

fn average_row(reports: &[&ComparisonReport]) -> ReportRow {
    let deltas: Vec<f64> = reports.iter().filter_map(|r| r.delta_percent).collect();
    ReportRow {
        dataset: AVERAGE_LABEL.into(),
        n_series: None,
        total_size: None,
        test_size: None,
        eims_mape: None,
        edms_mape: None,
        delta_percent: (!deltas.is_empty()).then(|| deltas.iter().sum::<f64>() / deltas.len() as f64),
    }
}

fn by_frequency(reports: &[ComparisonReport]) -> BTreeMap<Frequency, Vec<&ComparisonReport>> {
    let mut groups: BTreeMap<Frequency, Vec<&ComparisonReport>> = BTreeMap::new();
    for r in reports {
        groups.entry(r.frequency).or_default().push(r);
    }
    groups
}

fn rows(reports: &[&ComparisonReport]) -> Vec<ReportRow> {
    let mut rows: Vec<ReportRow> = reports.iter().map(|r| r.row()).collect();
    rows.push(average_row(reports));
    rows
}

/// CSV table (`dataset,n_series,total_size,test_size,eims_mape,edms_mape,delta_percent`)
/// for reports sharing one frequency.
pub fn render_report_csv(reports: &[&ComparisonReport]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for row in rows(reports) {
        wtr.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

pub fn render_report_text(frequency: Frequency, reports: &[&ComparisonReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Comparison of MAPE for EDMS and EIMS ({frequency} data)");
    let header = format!(
        "{:<28} {:>9} {:>11} {:>12} {:>12} {:>9}",
        "Data set", "Series", "Total/test", "EIMS", "EDMS", "Δ(%)"
    );
    let rule = "-".repeat(header.chars().count());
    let _ = writeln!(out, "{rule}\n{header}\n{rule}");
    for row in rows(reports) {
        let sizes = match (row.total_size, row.test_size) {
            (Some(t), Some(s)) => format!("{t}/{s}"),
            _ => String::new(),
        };
        let _ = writeln!(
            out,
            "{:<28} {:>9} {:>11} {:>12} {:>12} {:>9}",
            row.dataset,
            fmt_opt(row.n_series),
            sizes,
            row.eims_mape.map_or_else(String::new, |v| format!("{v:.6}")),
            row.edms_mape.map_or_else(String::new, |v| format!("{v:.6}")),
            row.delta_percent.map_or_else(|| "n/a".into(), |v| format!("{v:.2}")),
        );
    }
    let _ = writeln!(out, "{rule}");
    out
}

/// Renders one table per frequency present in `reports`.
pub fn render_report(reports: &[ComparisonReport], format: ReportFormat) -> Result<Vec<(Frequency, String)>> {
    by_frequency(reports)
        .into_iter()
        .map(|(freq, group)| {
            let doc = match format {
                ReportFormat::Csv => render_report_csv(&group)?,
                ReportFormat::Text => render_report_text(freq, &group),
            };
            Ok((freq, doc))
        })
        .collect()
}

pub fn parse_report_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::ParseError {
                row: i + 2,
                column: String::new(),
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{MapeDenominator, MapeResult};

    fn report(name: &str, freq: Frequency, eims: f64, edms: f64) -> ComparisonReport {
        let mk = |v: f64| MapeResult {
            per_series: [("s".to_string(), v)].into(),
            dataset_average: v,
            denominator_mode: MapeDenominator::Forecast,
        };
        ComparisonReport {
            dataset: name.into(),
            frequency: freq,
            n_series: 3,
            total_size: 54,
            test_size: 35,
            eims: mk(eims),
            edms: mk(edms),
            delta_percent: crate::eval::delta_percent(eims, edms).ok(),
        }
    }

    #[test]
    fn single_report_average_equals_row() {
        let r = report("x", Frequency::Annual, 0.3, 0.1);
        let rows = parse_report_csv(&render_report_csv(&[&r]).unwrap()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].dataset, AVERAGE_LABEL);
        assert_eq!(rows[1].delta_percent, rows[0].delta_percent);
    }

    #[test]
    fn average_of_ten_and_thirty() {
        let a = report("a", Frequency::Monthly, 1.0, 0.9);
        let b = report("b", Frequency::Monthly, 1.0, 0.7);
        let rows = parse_report_csv(&render_report_csv(&[&a, &b]).unwrap()).unwrap();
        assert!((rows[2].delta_percent.unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let a = report("first", Frequency::Quarterly, 0.123456789012345, 0.0987654321);
        let b = report("second, quoted", Frequency::Quarterly, 1.0 / 3.0, 2.0 / 7.0);
        let text = render_report_csv(&[&a, &b]).unwrap();
        assert!(text.starts_with("dataset,n_series,total_size,test_size,eims_mape,edms_mape,delta_percent\n"));
        let rows = parse_report_csv(&text).unwrap();
        assert_eq!(rows[0], a.row());
        assert_eq!(rows[1], b.row());
    }

    #[test]
    fn tables_per_frequency() {
        let reports = vec![
            report("a", Frequency::Monthly, 1.0, 0.5),
            report("b", Frequency::Annual, 1.0, 0.5),
            report("c", Frequency::Monthly, 1.0, 0.5),
        ];
        let tables = render_report(&reports, ReportFormat::Text).unwrap();
        assert_eq!(tables.len(), 2);
        assert_eq!(tables[0].0, Frequency::Annual);
        assert!(tables[1].1.contains("Average"));
    }
}
