// SPDX-License-Identifier: MIT OR Apache-2.0

//! EIMS and EDMS orchestration over a panel.
//!
//! EDMS splits the horizon at the retrain steps `s_1 < s_2 < ...` into
//! segments `(0, s_1], (s_1, s_2], ..., (s_k, H]`. Each segment is one
//! ensemble round on the working series (history plus every combined
//! forecast emitted so far): fresh 80/20 weights, a refit on the full
//! working series, and IMS roll-forward across the segment. The combined
//! segment forecast is appended before the next round. EIMS is the
//! single-segment case.

use std::collections::BTreeMap;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{ensemble_round, Member, Prefit, RoundConfig, RoundOutput};
use crate::error::{Error, Result};
use crate::models::{
    fit_lstm_pooled, forecast_model, holt_one_step_errors, fit_holt, ForecasterKind, ModelParams,
    TrainedModel,
};
use crate::seed::derive_seed;
use crate::timeseries::{split_train_test, Frequency, Panel, Series};

/// Horizon steps after which all members are refitted.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct RetrainSchedule(Vec<usize>);

impl RetrainSchedule {
    pub fn new(steps: Vec<usize>) -> Result<Self> {
        if steps.first() == Some(&0) {
            return Err(Error::InvalidSchedule("retrain steps must be positive".into()));
        }
        if steps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSchedule(format!(
                "retrain steps must be strictly increasing: {steps:?}"
            )));
        }
        Ok(Self(steps))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// One and five years (or months, for daily data) in native periods.
    pub fn default_for(frequency: Frequency) -> Self {
        Self(frequency.default_schedule())
    }

    pub fn steps(&self) -> &[usize] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Segment boundaries `[(0, s_1), (s_1, s_2), .., (s_k, H)]` as
    /// half-open step ranges `(start, end]`.
    pub fn segments(&self, horizon: usize) -> Result<Vec<(usize, usize)>> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        if let Some(&last) = self.0.last() {
            if last >= horizon {
                return Err(Error::InvalidSchedule(format!(
                    "retrain step {last} is not below the horizon {horizon}"
                )));
            }
        }
        let mut bounds = vec![0];
        bounds.extend_from_slice(&self.0);
        bounds.push(horizon);
        Ok(bounds.windows(2).map(|w| (w[0], w[1])).collect())
    }
}

impl TryFrom<Vec<usize>> for RetrainSchedule {
    type Error = Error;

    fn try_from(steps: Vec<usize>) -> Result<Self> {
        Self::new(steps)
    }
}

impl From<RetrainSchedule> for Vec<usize> {
    fn from(s: RetrainSchedule) -> Self {
        s.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub horizon: usize,
    pub schedule: RetrainSchedule,
    pub members: Vec<Member>,
    /// Split, metric, member hyperparameters and base seed.
    pub round: RoundConfig,
    /// Train one LSTM on the pooled windows of every panel series.
    pub global_lstm: bool,
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        crate::ensemble::round::validate_members(&self.members)?;
        self.schedule.segments(self.horizon)?;
        Ok(())
    }
}

/// Audit of one retrain stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    /// First horizon step covered (1-based).
    pub first_step: usize,
    /// Last horizon step covered.
    pub last_step: usize,
    pub round: RoundOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRun {
    pub id: String,
    pub forecast: Vec<f64>,
    pub stages: Vec<StageRecord>,
}

impl SeriesRun {
    /// Models from the last stage, refitted on the full working series.
    pub fn final_models(&self) -> Option<&BTreeMap<String, TrainedModel>> {
        self.stages.last().map(|s| &s.round.models)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRun {
    pub horizon: usize,
    pub schedule: RetrainSchedule,
    /// Successful series, in panel order.
    pub series: Vec<SeriesRun>,
    /// Failed series id -> reason.
    pub failures: BTreeMap<String, String>,
}

impl ForecastRun {
    pub fn get(&self, id: &str) -> Option<&SeriesRun> {
        self.series.iter().find(|s| s.id == id)
    }
}

/// Baseline: one ensemble round over the whole horizon, no refits.
pub fn run_eims(panel: &Panel, config: &RunConfig) -> Result<ForecastRun> {
    if !config.schedule.is_empty() {
        warn!(
            "EIMS never retrains; ignoring schedule {:?}",
            config.schedule.steps()
        );
    }
    let config = RunConfig {
        schedule: RetrainSchedule::empty(),
        ..config.clone()
    };
    run_staged(panel, &config)
}

/// Ensembled direct multi-step forecast with refits at the schedule steps.
pub fn run_edms(panel: &Panel, config: &RunConfig) -> Result<ForecastRun> {
    run_staged(panel, config)
}

struct Working {
    series: Series,
    stages: Vec<StageRecord>,
}

fn run_staged(panel: &Panel, config: &RunConfig) -> Result<ForecastRun> {
    config.validate()?;
    let segments = config.schedule.segments(config.horizon)?;
    let history = panel.length();

    let mut live: Vec<Working> = panel
        .series()
        .iter()
        .map(|s| Working {
            series: s.clone(),
            stages: Vec::new(),
        })
        .collect();
    let mut failures = BTreeMap::new();

    for (stage, &(start, end)) in segments.iter().enumerate() {
        let round_seed = |id: &str| derive_seed(config.round.seed, &[id, &stage.to_string()]);

        let prefits: Vec<BTreeMap<String, Prefit>> = if config.global_lstm {
            match global_lstm_prefits(&live, config, stage) {
                Ok(p) => p,
                Err(e) => {
                    for w in live.drain(..) {
                        failures.insert(w.series.id().to_string(), format!("global LSTM: {e}"));
                    }
                    break;
                }
            }
        } else {
            vec![BTreeMap::new(); live.len()]
        };

        let outcomes: Vec<Result<RoundOutput>> = live
            .par_iter()
            .zip(prefits.par_iter())
            .map(|(w, prefit)| {
                debug_assert_eq!(w.series.len(), history + start);
                let round = RoundConfig {
                    seed: round_seed(w.series.id()),
                    ..config.round.clone()
                };
                ensemble_round(&w.series, &config.members, end - start, &round, prefit)
            })
            .collect();

        let mut next = Vec::with_capacity(live.len());
        for (mut w, outcome) in live.into_iter().zip(outcomes) {
            match outcome.and_then(|round| {
                let extended = w.series.extended(&round.combined)?;
                Ok((round, extended))
            }) {
                Ok((round, extended)) => {
                    w.stages.push(StageRecord {
                        stage,
                        first_step: start + 1,
                        last_step: end,
                        round,
                    });
                    w.series = extended;
                    next.push(w);
                }
                Err(e) => {
                    warn!("series `{}` failed at stage {stage}: {e}", w.series.id());
                    failures.insert(w.series.id().to_string(), e.to_string());
                }
            }
        }
        live = next;
    }

    let series = live
        .into_iter()
        .map(|w| SeriesRun {
            id: w.series.id().to_string(),
            forecast: w.series.values()[history..].to_vec(),
            stages: w.stages,
        })
        .collect();
    Ok(ForecastRun {
        horizon: config.horizon,
        schedule: config.schedule.clone(),
        series,
        failures,
    })
}

/// Panel-wide LSTM fits for the performance split and the full working series.
fn global_lstm_prefits(
    live: &[Working],
    config: &RunConfig,
    stage: usize,
) -> Result<Vec<BTreeMap<String, Prefit>>> {
    let lstm_members: Vec<&Member> = config
        .members
        .iter()
        .filter(|m| m.kind == ForecasterKind::Lstm)
        .collect();
    let mut out = vec![BTreeMap::new(); live.len()];
    if lstm_members.is_empty() || live.is_empty() {
        return Ok(out);
    }
    let trains: Vec<Series> = live
        .iter()
        .map(|w| split_train_test(&w.series, config.round.split).map(|(t, _)| t))
        .collect::<Result<_>>()?;
    let fulls: Vec<&Series> = live.iter().map(|w| &w.series).collect();
    for member in lstm_members {
        let stage_tag = stage.to_string();
        let mut lstm = config.round.model.lstm.clone();
        lstm.seed = derive_seed(config.round.seed, &["global", &member.label, &stage_tag, "performance"]);
        let perf = fit_lstm_pooled(&trains.iter().collect::<Vec<_>>(), &lstm)?;
        lstm.seed = derive_seed(config.round.seed, &["global", &member.label, &stage_tag, "full"]);
        let full = fit_lstm_pooled(&fulls, &lstm)?;
        for (i, (p, f)) in perf.into_iter().zip(full).enumerate() {
            out[i].insert(
                member.label.clone(),
                Prefit {
                    performance: TrainedModel {
                        params: ModelParams::Lstm(p),
                        train_length: trains[i].len(),
                    },
                    full: TrainedModel {
                        params: ModelParams::Lstm(f),
                        train_length: fulls[i].len(),
                    },
                },
            );
        }
    }
    Ok(out)
}

/// Iterated multi-step forecast: each one-step prediction is appended to
/// the context before the next is made.
pub fn ims_roll(model: &TrainedModel, context: &[f64], h: usize) -> Result<Vec<f64>> {
    if h == 0 {
        return Err(Error::InvalidParameter("horizon must be positive".into()));
    }
    let mut ctx = context.to_vec();
    let mut out = Vec::with_capacity(h);
    for _ in 0..h {
        let next = forecast_model(model, &ctx, 1)?[0];
        out.push(next);
        ctx.push(next);
    }
    Ok(out)
}

/// Scale-free in-sample fit error per series (Holt one-step mean absolute
/// error over mean absolute level), used to flag irregular series.
pub fn irregularity_scores(panel: &Panel) -> Result<BTreeMap<String, f64>> {
    panel
        .series()
        .iter()
        .map(|s| {
            let p = fit_holt(s)?;
            let errs = holt_one_step_errors(s.values(), p.alpha, p.gamma);
            let mae = errs.iter().map(|e| e.abs()).sum::<f64>() / errs.len() as f64;
            let level = s.values().iter().map(|v| v.abs()).sum::<f64>() / s.len() as f64;
            let score = if level > 0.0 { mae / level } else { mae };
            Ok((s.id().to_string(), score))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit_model, ModelConfig};
    use crate::timeseries::Frequency;

    #[test]
    fn schedule_validation() {
        assert!(RetrainSchedule::new(vec![5, 1]).is_err());
        assert!(RetrainSchedule::new(vec![0, 1]).is_err());
        assert!(RetrainSchedule::new(vec![1, 1]).is_err());
        let s = RetrainSchedule::new(vec![1, 5]).unwrap();
        assert_eq!(s.segments(20).unwrap(), vec![(0, 1), (1, 5), (5, 20)]);
        assert!(s.segments(5).is_err());
        assert_eq!(RetrainSchedule::empty().segments(7).unwrap(), vec![(0, 7)]);
        assert_eq!(
            RetrainSchedule::default_for(Frequency::Daily).steps(),
            &[21, 105]
        );
    }

    #[test]
    fn ims_roll_matches_closed_forms() {
        let s = Series::new(
            "x",
            Frequency::Annual,
            0,
            vec![3.0, 3.5, 4.1, 4.4, 5.2, 5.9, 6.1, 7.0],
        )
        .unwrap();
        for kind in [
            ForecasterKind::AvgGrowth,
            ForecasterKind::Linear,
            ForecasterKind::Polynomial,
            ForecasterKind::Holt,
        ] {
            let m = fit_model(kind, &s, &ModelConfig::default()).unwrap();
            let rolled = ims_roll(&m, s.values(), 12).unwrap();
            let direct = forecast_model(&m, s.values(), 12).unwrap();
            for (a, b) in rolled.iter().zip(&direct) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{kind}");
            }
            assert_eq!(ims_roll(&m, s.values(), 1).unwrap()[0], direct[0]);
        }
    }

    #[test]
    fn lstm_ims_roll_matches_forecast() {
        let values: Vec<f64> = (0..30).map(|t| 10.0 + (t as f64 * 0.5).cos()).collect();
        let s = Series::new("x", Frequency::Monthly, 0, values).unwrap();
        let mut config = ModelConfig::default();
        config.lstm.hidden_size = 4;
        config.lstm.lookback = 5;
        config.lstm.epochs = 10;
        let m = fit_model(ForecasterKind::Lstm, &s, &config).unwrap();
        let rolled = ims_roll(&m, s.values(), 6).unwrap();
        let direct = forecast_model(&m, s.values(), 6).unwrap();
        for (a, b) in rolled.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
