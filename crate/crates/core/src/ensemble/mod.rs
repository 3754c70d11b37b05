// SPDX-License-Identifier: MIT OR Apache-2.0

//! Performance-weighted combination of member forecasts.
//!
//! Each member's held-out error `e_i` is inverted as `e'_i = 1 - e_i / sum(e)`
//! and normalised to a weight `w_i = e'_i / sum(e')`. The ensemble forecast
//! is the weighted arithmetic mean of member forecasts.

pub(crate) mod round;

pub use round::{ensemble_round, Member, Prefit, RoundConfig, RoundOutput};

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Error metric used to score members on the held-out segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMetric {
    #[default]
    Mae,
    Mse,
    Rmse,
    Mape,
}

impl FromStr for WeightMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mae" => Ok(WeightMetric::Mae),
            "mse" => Ok(WeightMetric::Mse),
            "rmse" => Ok(WeightMetric::Rmse),
            "mape" => Ok(WeightMetric::Mape),
            other => Err(Error::InvalidParameter(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    /// Held-out error per member label.
    pub maes: BTreeMap<String, f64>,
    /// Length of the held-out segment the errors were measured on.
    pub horizon_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub weights: BTreeMap<String, f64>,
}

impl WeightVector {
    pub fn get(&self, member: &str) -> Option<f64> {
        self.weights.get(member).copied()
    }

    pub fn sum(&self) -> f64 {
        self.weights.values().sum()
    }
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Mean absolute error between a forecast and the held-out values.
pub fn compute_member_mae(forecast: &[f64], test: &[f64]) -> Result<f64> {
    check_lengths(forecast, test)?;
    Ok(forecast
        .iter()
        .zip(test)
        .map(|(f, y)| (f - y).abs())
        .sum::<f64>()
        / forecast.len() as f64)
}

/// Held-out error under the chosen metric. MAPE here uses the actual value
/// as denominator.
pub fn compute_member_error(metric: WeightMetric, forecast: &[f64], test: &[f64]) -> Result<f64> {
    check_lengths(forecast, test)?;
    let n = forecast.len() as f64;
    let pairs = forecast.iter().zip(test);
    Ok(match metric {
        WeightMetric::Mae => return compute_member_mae(forecast, test),
        WeightMetric::Mse => pairs.map(|(f, y)| (f - y) * (f - y)).sum::<f64>() / n,
        WeightMetric::Rmse => (pairs.map(|(f, y)| (f - y) * (f - y)).sum::<f64>() / n).sqrt(),
        WeightMetric::Mape => {
            let bad: Vec<usize> = test
                .iter()
                .enumerate()
                .filter(|(_, y)| y.abs() < 1e-9)
                .map(|(i, _)| i + 1)
                .collect();
            if !bad.is_empty() {
                return Err(Error::NearZeroDenominator(bad));
            }
            pairs.map(|(f, y)| ((f - y) / y).abs()).sum::<f64>() / n
        }
    })
}

/// Inverse-error weights. All-zero errors fall back to equal weights.
pub fn compute_weights(report: &PerformanceReport) -> Result<WeightVector> {
    let k = report.maes.len();
    if k < 2 {
        return Err(Error::TooFewMembers(k));
    }
    if let Some((name, e)) = report.maes.iter().find(|(_, e)| !(e.is_finite() && **e >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "member `{name}` has invalid error {e}"
        )));
    }
    let total: f64 = report.maes.values().sum();
    if total == 0.0 {
        let w = 1.0 / k as f64;
        return Ok(WeightVector {
            weights: report.maes.keys().map(|m| (m.clone(), w)).collect(),
        });
    }
    let inverted: BTreeMap<String, f64> = report
        .maes
        .iter()
        .map(|(m, e)| (m.clone(), 1.0 - e / total))
        .collect();
    let norm: f64 = inverted.values().sum();
    Ok(WeightVector {
        weights: inverted.into_iter().map(|(m, v)| (m, v / norm)).collect(),
    })
}

/// Weighted arithmetic mean of member forecasts, step by step.
pub fn combine(
    forecasts: &BTreeMap<String, Vec<f64>>,
    weights: &WeightVector,
) -> Result<Vec<f64>> {
    if !forecasts.keys().eq(weights.weights.keys()) {
        return Err(Error::KeyMismatch(format!(
            "forecasts {:?} vs weights {:?}",
            forecasts.keys().collect::<Vec<_>>(),
            weights.weights.keys().collect::<Vec<_>>()
        )));
    }
    let horizon = forecasts.values().next().map_or(0, Vec::len);
    let mut out = vec![0.0; horizon];
    for (member, f) in forecasts {
        if f.len() != horizon {
            return Err(Error::LengthMismatch {
                left: f.len(),
                right: horizon,
            });
        }
        let w = weights.weights[member];
        for (o, v) in out.iter_mut().zip(f) {
            *o += w * v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn report(maes: &[(&str, f64)]) -> PerformanceReport {
        PerformanceReport {
            maes: maes.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            horizon_used: 1,
        }
    }

    #[test]
    fn mae_examples() {
        assert_eq!(compute_member_mae(&[1., 2.], &[1., 2.]).unwrap(), 0.0);
        assert_eq!(compute_member_mae(&[1., 2.], &[2., 4.]).unwrap(), 1.5);
        assert_eq!(compute_member_mae(&[0.], &[-3.]).unwrap(), 3.0);
        assert!(matches!(
            compute_member_mae(&[0.], &[1., 2.]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn other_metrics() {
        let f = [1.0, 4.0];
        let y = [2.0, 2.0];
        assert_eq!(compute_member_error(WeightMetric::Mse, &f, &y).unwrap(), 2.5);
        assert_eq!(compute_member_error(WeightMetric::Rmse, &f, &y).unwrap(), 2.5f64.sqrt());
        assert_eq!(compute_member_error(WeightMetric::Mape, &f, &y).unwrap(), 0.75);
        assert!(compute_member_error(WeightMetric::Mape, &f, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn weights_one_two_three() {
        let w = compute_weights(&report(&[("A", 1.), ("B", 2.), ("C", 3.)])).unwrap();
        for (k, e) in [("A", 5.0 / 12.0), ("B", 4.0 / 12.0), ("C", 3.0 / 12.0)] {
            assert!((w.get(k).unwrap() - e).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_and_degenerate_weights() {
        for x in [0.0, 0.3, 7.0] {
            let w = compute_weights(&report(&[("A", x), ("B", x)])).unwrap();
            assert_eq!(w.get("A"), Some(0.5));
            assert_eq!(w.get("B"), Some(0.5));
        }
        assert!(matches!(
            compute_weights(&report(&[("A", 1.0)])),
            Err(Error::TooFewMembers(1))
        ));
    }

    #[test]
    fn combine_examples() {
        let w = WeightVector {
            weights: [("a".to_string(), 0.3), ("b".to_string(), 0.7)].into(),
        };
        let f: BTreeMap<_, _> = [("a".to_string(), vec![0., 0.]), ("b".to_string(), vec![10., 10.])].into();
        let out = combine(&f, &w).unwrap();
        assert!(out.iter().all(|v| (v - 7.0).abs() < 1e-12));

        let one = WeightVector {
            weights: [("a".to_string(), 1.0), ("b".to_string(), 0.0)].into(),
        };
        let f: BTreeMap<_, _> = [("a".to_string(), vec![1.5, -2.0]), ("b".to_string(), vec![9., 9.])].into();
        assert_eq!(combine(&f, &one).unwrap(), vec![1.5, -2.0]);

        let mut missing = f.clone();
        missing.remove("b");
        assert!(matches!(combine(&missing, &one), Err(Error::KeyMismatch(_))));
    }

    fn maes_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..100.0, 2..8)
    }

    fn named(maes: &[f64]) -> PerformanceReport {
        PerformanceReport {
            maes: maes.iter().enumerate().map(|(i, v)| (format!("m{i}"), *v)).collect(),
            horizon_used: 1,
        }
    }

    proptest! {
        #[test]
        fn weights_are_a_distribution(maes in maes_strategy()) {
            let w = compute_weights(&named(&maes)).unwrap();
            prop_assert!((w.sum() - 1.0).abs() < 1e-12);
            prop_assert!(w.weights.values().all(|&v| (0.0..=1.0).contains(&v)));
        }

        #[test]
        fn weights_are_scale_invariant(maes in maes_strategy(), c in 1e-3f64..1e3) {
            let a = compute_weights(&named(&maes)).unwrap();
            let scaled: Vec<f64> = maes.iter().map(|m| m * c).collect();
            let b = compute_weights(&named(&scaled)).unwrap();
            for (x, y) in a.weights.values().zip(b.weights.values()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn combine_is_convex(
            rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 4), 2..6),
            maes in prop::collection::vec(0.0f64..10.0, 6),
        ) {
            let k = rows.len();
            let w = compute_weights(&named(&maes[..k])).unwrap();
            let f: BTreeMap<String, Vec<f64>> =
                rows.iter().enumerate().map(|(i, r)| (format!("m{i}"), r.clone())).collect();
            let out = combine(&f, &w).unwrap();
            for h in 0..4 {
                let lo = rows.iter().map(|r| r[h]).fold(f64::INFINITY, f64::min);
                let hi = rows.iter().map(|r| r[h]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(out[h] >= lo - 1e-9 && out[h] <= hi + 1e-9);
            }
        }
    }
}
