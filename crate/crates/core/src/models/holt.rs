// SPDX-License-Identifier: MIT OR Apache-2.0

//! Holt's additive-trend exponential smoothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::Series;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoltParams {
    pub alpha: f64,
    pub gamma: f64,
    /// Final level `L_N`.
    pub level: f64,
    /// Final trend `T_N`.
    pub trend: f64,
}

/// Smoothing state after running the recursions over `y`.
#[derive(Debug, Clone, Copy)]
struct HoltState {
    level: f64,
    trend: f64,
    rss: f64,
}

fn run(y: &[f64], alpha: f64, gamma: f64) -> HoltState {
    let mut level = y[0];
    let mut trend = y[1] - y[0];
    let mut rss = 0.0;
    for &yt in &y[1..] {
        let predicted = level + trend;
        let err = yt - predicted;
        rss += err * err;
        let next_level = alpha * yt + (1.0 - alpha) * predicted;
        trend = gamma * (next_level - level) + (1.0 - gamma) * trend;
        level = next_level;
    }
    HoltState { level, trend, rss }
}

/// One-step-ahead residual sum of squares for fixed smoothing constants.
pub fn holt_rss(y: &[f64], alpha: f64, gamma: f64) -> f64 {
    run(y, alpha, gamma).rss
}

/// One-step-ahead training errors `y_t - (L_{t-1} + T_{t-1})`, `t = 2..N`.
pub fn holt_one_step_errors(y: &[f64], alpha: f64, gamma: f64) -> Vec<f64> {
    let mut level = y[0];
    let mut trend = y[1] - y[0];
    let mut errs = Vec::with_capacity(y.len() - 1);
    for &yt in &y[1..] {
        let predicted = level + trend;
        errs.push(yt - predicted);
        let next_level = alpha * yt + (1.0 - alpha) * predicted;
        trend = gamma * (next_level - level) + (1.0 - gamma) * trend;
        level = next_level;
    }
    errs
}

const GRID: u32 = 100;
const FINE: u32 = 1000;

/// Fits `(alpha, gamma)` by scanning a 0.01 grid on `[0.01, 0.99]^2` and
/// refining coordinate-wise at 0.001 resolution.
pub fn fit_holt(train: &Series) -> Result<HoltParams> {
    train.ensure_len(3)?;
    let y = train.values();

    let mut best = (f64::INFINITY, 0u32, 0u32);
    for a in 1..GRID {
        for g in 1..GRID {
            let rss = holt_rss(y, a as f64 / GRID as f64, g as f64 / GRID as f64);
            if rss < best.0 {
                best = (rss, a, g);
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Holt RSS is not finite for series `{}`",
            train.id()
        )));
    }

    // Work in thousandths from here on.
    let ratio = FINE / GRID;
    let (mut rss, mut a, mut g) = (best.0, best.1 * ratio, best.2 * ratio);
    let span = ratio as i64;
    for _ in 0..100 {
        let mut moved = false;
        for axis in 0..2 {
            let centre = if axis == 0 { a } else { g } as i64;
            for k in (centre - span).max(1)..=(centre + span).min(FINE as i64 - 1) {
                let (ca, cg) = if axis == 0 { (k as u32, g) } else { (a, k as u32) };
                let r = holt_rss(y, ca as f64 / FINE as f64, cg as f64 / FINE as f64);
                if r < rss {
                    rss = r;
                    a = ca;
                    g = cg;
                    moved = true;
                }
            }
        }
        if !moved {
            break;
        }
    }

    let alpha = a as f64 / FINE as f64;
    let gamma = g as f64 / FINE as f64;
    let state = run(y, alpha, gamma);
    Ok(HoltParams {
        alpha,
        gamma,
        level: state.level,
        trend: state.trend,
    })
}

pub(crate) fn forecast_from(params: &HoltParams, offset: usize, h: usize) -> Vec<f64> {
    (offset + 1..=offset + h)
        .map(|k| params.level + k as f64 * params.trend)
        .collect()
}

pub fn forecast_holt(params: &HoltParams, h: usize) -> Vec<f64> {
    forecast_from(params, 0, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::Frequency;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(v: Vec<f64>) -> Series {
        Series::new("h", Frequency::Annual, 0, v).unwrap()
    }

    #[test]
    fn affine_series_is_reproduced() {
        let y: Vec<f64> = (0..20).map(|t| 2.0 + 3.0 * t as f64).collect();
        let p = fit_holt(&s(y.clone())).unwrap();
        let errs = holt_one_step_errors(&y, p.alpha, p.gamma);
        assert!(errs.iter().all(|e| e.abs() <= 1e-9));
        assert!((p.level + p.trend - (2.0 + 3.0 * 20.0)).abs() <= 1e-9);
    }

    #[test]
    fn constant_series() {
        let p = fit_holt(&s(vec![4.0; 5])).unwrap();
        assert!(p.trend.abs() <= 1e-9);
        assert_eq!(p.level, 4.0);
    }

    #[test]
    fn grid_beats_random_probes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y: Vec<f64> = {
            let mut v = 50.0;
            (0..30)
                .map(|_| {
                    v += rng.gen_range(-2.0..2.5);
                    v
                })
                .collect()
        };
        let p = fit_holt(&s(y.clone())).unwrap();
        let best = holt_rss(&y, p.alpha, p.gamma);
        for _ in 0..100 {
            let a = rng.gen_range(0.01..0.99);
            let g = rng.gen_range(0.01..0.99);
            assert!(best <= holt_rss(&y, a, g));
        }
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            fit_holt(&s(vec![1.0, 2.0])),
            Err(Error::SeriesTooShort { needed: 3, .. })
        ));
    }

    #[test]
    fn forecasts() {
        let p = |level, trend| HoltParams {
            alpha: 0.5,
            gamma: 0.5,
            level,
            trend,
        };
        assert_eq!(forecast_holt(&p(10.0, 0.0), 4), vec![10.0; 4]);
        assert_eq!(forecast_holt(&p(10.0, 2.0), 3), vec![12.0, 14.0, 16.0]);
        assert_eq!(forecast_holt(&p(0.0, -1.0), 2), vec![-1.0, -2.0]);
    }
}
