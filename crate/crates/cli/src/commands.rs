// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use edms_core::ensemble::{RoundConfig, RoundOutput};
use edms_core::eval::{render_report, ComparisonReport, ReportFormat};
use edms_core::models::ModelSnapshot;
use edms_core::pipeline::{
    irregularity_scores, run_edms, run_eims, ForecastRun, RetrainSchedule, RunConfig,
};
use edms_core::seed::derive_seed;
use edms_core::synth::{generate, SynthSpec};
use edms_core::timeseries::{
    align_panel, load_panel_csv, prune_irregular, render_wide_csv, Frequency, Panel,
};
use log::{info, warn};

use crate::artifacts::*;
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub struct Prepared {
    pub panel: Panel,
    pub summary: PanelSummary,
}

/// Load, align and (optionally) prune.
pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    let raw = load_panel_csv(config.data_path(), config.schema())?;
    let raw_series = raw.len();
    let aligned = align_panel(raw)?;
    let cutoff = aligned.cutoff;
    let mut dropped: Vec<DroppedSeries> = aligned
        .dropped
        .iter()
        .map(|id| DroppedSeries {
            id: id.clone(),
            reason: format!("shorter than the common length {cutoff}"),
        })
        .collect();
    let mut panel = aligned.panel;
    let mut median_fit_error = None;
    if config.run.prune {
        let scores = irregularity_scores(&panel)?;
        let threshold = config.run.prune_threshold;
        let pruned = prune_irregular(panel, &scores, threshold)?;
        dropped.extend(pruned.dropped.iter().map(|id| DroppedSeries {
            id: id.clone(),
            reason: format!(
                "fit error {:.6} exceeds {threshold} x median {:.6}",
                scores[id], pruned.median_error
            ),
        }));
        median_fit_error = Some(pruned.median_error);
        panel = pruned.panel;
    }
    let summary = PanelSummary {
        dataset: config.dataset.clone(),
        frequency: panel.frequency(),
        raw_series,
        cutoff,
        n_series: panel.len(),
        length: panel.length(),
        series: panel.series().iter().map(|s| s.id().to_string()).collect(),
        dropped,
        median_fit_error,
        fingerprint: panel.fingerprint(),
    };
    Ok(Prepared { panel, summary })
}

pub fn cmd_validate(config: &ExperimentConfig) -> Result<PanelSummary> {
    Ok(prepare(config)?.summary)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
    pub report: Option<ComparisonReport>,
}

pub fn cmd_run(config: &ExperimentConfig, method: Method) -> Result<RunOutcome> {
    let out_dir = config
        .out_dir()
        .ok_or_else(|| CliError::Config("no output directory (set `out` or pass --out)".into()))?;
    let prepared = prepare(config)?;
    let panel = &prepared.panel;
    let horizon = config.horizon(panel.length());
    let (history, holdout) = panel.holdout(horizon)?;
    let run_config = config.run_config(horizon)?;
    run_config
        .schedule
        .segments(horizon)
        .map_err(|e| CliError::Config(format!("{e} (set run.horizon or --schedule)")))?;
    info!(
        "{}: {} series, history {}, horizon {horizon}",
        config.dataset,
        panel.len(),
        history.length()
    );

    let mut runs: Vec<(Method, ForecastRun)> = Vec::new();
    if method.runs_eims() {
        let eims_config = RunConfig {
            schedule: RetrainSchedule::empty(),
            ..run_config.clone()
        };
        runs.push((Method::Eims, run_eims(&history, &eims_config)?));
    }
    if method.runs_edms() {
        runs.push((Method::Edms, run_edms(&history, &run_config)?));
    }

    let actual: BTreeMap<String, Vec<f64>> = holdout
        .series()
        .iter()
        .map(|s| (s.id().to_string(), s.values().to_vec()))
        .collect();
    let forecasts = |m: Method| -> BTreeMap<String, Vec<f64>> {
        runs.iter()
            .filter(|(rm, _)| *rm == m)
            .flat_map(|(_, r)| r.series.iter().map(|s| (s.id.clone(), s.forecast.clone())))
            .collect()
    };
    let eims = forecasts(Method::Eims);
    let edms = forecasts(Method::Edms);

    let mut series_status: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    for (m, run) in &runs {
        for s in &run.series {
            series_status
                .entry(s.id.clone())
                .or_default()
                .insert(m.as_str().into(), "ok".into());
        }
        for (id, reason) in &run.failures {
            warn!("{}: series `{id}` failed under {}: {reason}", config.dataset, m.as_str());
            series_status
                .entry(id.clone())
                .or_default()
                .insert(m.as_str().into(), format!("failed: {reason}"));
        }
    }

    let mut recorded = config.clone();
    recorded.out = None;
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        dataset: config.dataset.clone(),
        frequency: panel.frequency(),
        method,
        total_length: panel.length(),
        history_length: history.length(),
        horizon,
        schedule: run_config.schedule.steps().to_vec(),
        seed: config.seed,
        mape_denominator: config.run.mape_denominator,
        panel_fingerprint: prepared.summary.fingerprint.clone(),
        series_status,
        config: recorded,
    };
    write_json(&out_dir.join(MANIFEST), &manifest)?;
    write_json(&out_dir.join(PANEL), &prepared.summary)?;

    if let Some((m, _)) = runs.iter().find(|(_, r)| r.series.is_empty()) {
        return Err(CliError::Runtime(format!(
            "every series failed under {}; see {}",
            m.as_str(),
            out_dir.join(MANIFEST).display()
        )));
    }

    let mut rows = Vec::new();
    for s in panel.series() {
        let (e, d) = (eims.get(s.id()), edms.get(s.id()));
        if e.is_none() && d.is_none() {
            continue;
        }
        for step in 1..=horizon {
            rows.push(ForecastRow {
                series_id: s.id().to_string(),
                step,
                eims_value: e.map(|v| v[step - 1]),
                edms_value: d.map(|v| v[step - 1]),
            });
        }
    }
    write_csv(&out_dir.join(FORECASTS), &rows, FORECAST_HEADER)?;

    let actual_rows: Vec<ActualRow> = actual
        .iter()
        .flat_map(|(id, v)| {
            v.iter().enumerate().map(move |(i, &value)| ActualRow {
                series_id: id.clone(),
                step: i + 1,
                value,
            })
        })
        .collect();
    write_csv(&out_dir.join(ACTUALS), &actual_rows, ACTUAL_HEADER)?;

    let mut weight_rows = Vec::new();
    let mut models = Vec::new();
    for (m, run) in &runs {
        for s in &run.series {
            for stage in &s.stages {
                let r = &stage.round;
                for (member, w) in &r.weights.weights {
                    weight_rows.push(WeightRow {
                        method: *m,
                        series_id: s.id.clone(),
                        stage: stage.stage,
                        first_step: stage.first_step,
                        last_step: stage.last_step,
                        working_length: r.working_length,
                        member: member.clone(),
                        error: r.report.maes[member],
                        weight: *w,
                    });
                }
            }
            if let Some(last) = s.stages.last() {
                for (member, model) in &last.round.models {
                    let seed = model_seed(&run_config, &s.id, last.stage, member);
                    let mut model_config = run_config.round.model.clone();
                    model_config.lstm.seed = seed;
                    models.push(ModelRecord {
                        method: *m,
                        stage: last.stage,
                        snapshot: ModelSnapshot {
                            series_id: s.id.clone(),
                            member: member.clone(),
                            seed,
                            config: model_config,
                            model: model.clone(),
                        },
                    });
                }
            }
        }
    }
    write_csv(&out_dir.join(WEIGHTS), &weight_rows, WEIGHT_HEADER)?;
    let audits: Vec<RunAudit> = runs
        .iter()
        .map(|(m, run)| RunAudit {
            method: *m,
            run: run.clone(),
        })
        .collect();
    write_json(&out_dir.join(ROUNDS), &audits)?;
    write_json(&out_dir.join(MODELS), &models)?;

    let report = if method == Method::Both {
        let report = ComparisonReport::compare(
            config.dataset.clone(),
            panel.frequency(),
            panel.length(),
            horizon,
            &actual,
            &eims,
            &edms,
            config.run.mape_denominator,
        )?;
        write_reports(&out_dir, &report)?;
        Some(report)
    } else {
        None
    };

    Ok(RunOutcome {
        out_dir,
        manifest,
        report,
    })
}

/// Seed the final fit of `member` used, mirroring the pipeline's derivation.
fn model_seed(config: &RunConfig, id: &str, stage: usize, member: &str) -> u64 {
    let is_lstm = config
        .members
        .iter()
        .any(|m| m.label == member && m.kind == edms_core::models::ForecasterKind::Lstm);
    if config.global_lstm && is_lstm {
        return derive_seed(config.round.seed, &["global", member, &stage.to_string(), "full"]);
    }
    let round = RoundConfig {
        seed: derive_seed(config.round.seed, &[id, &stage.to_string()]),
        ..config.round.clone()
    };
    RoundOutput::member_seed(&round, member, true)
}

/// Writes the single-dataset `report.csv` and `report.txt` of a run.
fn write_reports(dir: &Path, report: &ComparisonReport) -> Result<()> {
    let reports = std::slice::from_ref(report);
    for (format, name) in [(ReportFormat::Csv, REPORT_CSV), (ReportFormat::Text, REPORT_TEXT)] {
        for (_, text) in render_report(reports, format)? {
            write_text(&dir.join(name), &text)?;
        }
    }
    Ok(())
}

pub fn report_name(frequency: Frequency) -> String {
    format!("report_{}.csv", frequency.as_str())
}

/// Makes a dataset or series name safe as a single path component.
pub fn file_stem(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() || s.chars().all(|c| c == '.') {
        format!("_{s}")
    } else {
        s
    }
}

/// A completed `both` run read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub manifest: Manifest,
    pub actual: BTreeMap<String, Vec<f64>>,
    pub eims: BTreeMap<String, Vec<f64>>,
    pub edms: BTreeMap<String, Vec<f64>>,
}

pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let manifest: Manifest = read_json(&dir.join(MANIFEST))?;
    let fpath = dir.join(FORECASTS);
    let rows: Vec<ForecastRow> = read_csv(&fpath)?;
    let eims = by_series(&fpath, &rows, |r| (&r.series_id, r.step, r.eims_value))?;
    let edms = by_series(&fpath, &rows, |r| (&r.series_id, r.step, r.edms_value))?;
    let apath = dir.join(ACTUALS);
    let arows: Vec<ActualRow> = read_csv(&apath)?;
    let actual = by_series(&apath, &arows, |r| (&r.series_id, r.step, Some(r.value)))?;

    if eims.is_empty() || edms.is_empty() {
        return Err(CliError::artifact(
            &fpath,
            "run lacks EIMS or EDMS forecasts; report needs a `both` run",
        ));
    }
    for (name, map) in [("EIMS", &eims), ("EDMS", &edms), ("actual", &actual)] {
        if let Some((id, v)) = map.iter().find(|(_, v)| v.len() != manifest.horizon) {
            return Err(CliError::artifact(
                dir,
                format!(
                    "{name} values for `{id}` cover {} steps, manifest horizon is {}",
                    v.len(),
                    manifest.horizon
                ),
            ));
        }
    }
    Ok(LoadedRun {
        manifest,
        actual,
        eims,
        edms,
    })
}

#[derive(Debug, Clone)]
pub struct ReportOutcome {
    pub reports: Vec<ComparisonReport>,
    pub written: Vec<PathBuf>,
}

/// Merges `both` runs into per-frequency tables plus per-series plot data.
pub fn cmd_report(run_dirs: &[PathBuf], out: &Path) -> Result<ReportOutcome> {
    if run_dirs.is_empty() {
        return Err(CliError::Config("no run directories given".into()));
    }
    let mut reports = Vec::with_capacity(run_dirs.len());
    let mut written = Vec::new();
    let mut seen = BTreeMap::new();
    for dir in run_dirs {
        let run = load_run(dir)?;
        let m = &run.manifest;
        let stem = file_stem(&m.dataset);
        if let Some(prev) = seen.insert(stem.clone(), dir.clone()) {
            return Err(CliError::Config(format!(
                "dataset `{}` appears in both {} and {}",
                m.dataset,
                prev.display(),
                dir.display()
            )));
        }
        let report = ComparisonReport::compare(
            m.dataset.clone(),
            m.frequency,
            m.total_length,
            m.horizon,
            &run.actual,
            &run.eims,
            &run.edms,
            m.mape_denominator,
        )?;
        for id in report.eims.per_series.keys() {
            let rows: Vec<PlotRow> = (0..m.horizon)
                .map(|i| PlotRow {
                    step: i + 1,
                    actual: run.actual[id][i],
                    eims: run.eims[id][i],
                    edms: run.edms[id][i],
                })
                .collect();
            let path = out
                .join("plots")
                .join(&stem)
                .join(format!("{}.csv", file_stem(id)));
            write_csv(&path, &rows, PLOT_HEADER)?;
            written.push(path);
        }
        reports.push(report);
    }

    let tables = render_report(&reports, ReportFormat::Csv)?;
    for (freq, csv) in &tables {
        let path = out.join(report_name(*freq));
        write_text(&path, csv)?;
        written.push(path);
    }
    let texts = render_report(&reports, ReportFormat::Text)?;
    let text = texts
        .iter()
        .map(|(_, t)| t.as_str())
        .collect::<Vec<_>>()
        .join("\n");
    let path = out.join(REPORT_TEXT);
    write_text(&path, &text)?;
    written.push(path);
    Ok(ReportOutcome { reports, written })
}

/// Writes one synthetic panel as wide CSV.
pub fn cmd_synth(spec: &SynthSpec, out: &Path) -> Result<()> {
    let series = generate(spec)?;
    write_text(out, &render_wide_csv(&series)?)
}
