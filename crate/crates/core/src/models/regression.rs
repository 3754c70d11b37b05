// SPDX-License-Identifier: MIT OR Apache-2.0

//! Least-squares trend regression on the time index (linear or quadratic).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::Series;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionParams {
    /// Intercept first, then powers of `t`.
    pub coefficients: Vec<f64>,
    pub degree: usize,
    /// Period index of the first training point (`t = 0`).
    pub time_origin: i64,
}

impl RegressionParams {
    pub fn eval(&self, t: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
}

/// Ordinary least squares of `y_t` on `(1, t, .., t^degree)`, `t = 0..N-1`.
///
/// The design is solved in the rescaled variable `u = t / (N-1)` so the
/// normal matrix stays well conditioned, then mapped back to `t`.
pub fn fit_regression(train: &Series, degree: usize) -> Result<RegressionParams> {
    if !(1..=2).contains(&degree) {
        return Err(Error::InvalidParameter(format!(
            "regression degree must be 1 or 2, got {degree}"
        )));
    }
    train.ensure_len(degree + 2)?;
    let y = train.values();
    let n = y.len();
    let p = degree + 1;
    let scale = (n - 1) as f64;

    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    let mut row = vec![0.0; p];
    for (t, &yt) in y.iter().enumerate() {
        let u = t as f64 / scale;
        row[0] = 1.0;
        for k in 1..p {
            row[k] = row[k - 1] * u;
        }
        for i in 0..p {
            xty[i] += row[i] * yt;
            for j in 0..p {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    let beta_u = solve(xtx, xty)?;
    let coefficients = beta_u
        .iter()
        .enumerate()
        .map(|(k, b)| b / scale.powi(k as i32))
        .collect();
    Ok(RegressionParams {
        coefficients,
        degree,
        time_origin: train.start(),
    })
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return Err(Error::SingularDesign);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= factor * a[col][c];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - tail) / a[r][r];
    }
    Ok(x)
}

/// Evaluates the fitted polynomial at `t = first_t, .., first_t + h - 1`.
pub(crate) fn forecast_from(params: &RegressionParams, first_t: usize, h: usize) -> Vec<f64> {
    (first_t..first_t + h).map(|t| params.eval(t as f64)).collect()
}

/// Forecast for a model trained on `train_length` points.
pub fn forecast_regression(params: &RegressionParams, train_length: usize, h: usize) -> Vec<f64> {
    forecast_from(params, train_length, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::Frequency;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(v: Vec<f64>) -> Series {
        Series::new("r", Frequency::Annual, 0, v).unwrap()
    }

    #[test]
    fn exact_line() {
        let p = fit_regression(&s((0..12).map(|t| 3.0 + 2.0 * t as f64).collect()), 1).unwrap();
        assert!((p.coefficients[0] - 3.0).abs() < 1e-9);
        assert!((p.coefficients[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn exact_parabola() {
        let p = fit_regression(&s((0..15).map(|t| 1.0 + (t * t) as f64).collect()), 2).unwrap();
        for (c, e) in p.coefficients.iter().zip([1.0, 0.0, 1.0]) {
            assert!((c - e).abs() < 1e-9, "{c} vs {e}");
        }
    }

    /// Independent check: X^T (y - X b) = 0 in the raw time index.
    fn normal_equation_residual(y: &[f64], p: &RegressionParams) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..=p.degree {
            let mut dot = 0.0;
            let mut mag = 0.0;
            for (t, &yt) in y.iter().enumerate() {
                let x = (t as f64).powi(k as i32);
                let r = yt - p.eval(t as f64);
                dot += x * r;
                mag += (x * yt).abs();
            }
            worst = worst.max(dot.abs() / mag.max(1.0));
        }
        worst
    }

    #[test]
    fn random_series_satisfy_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for degree in [1, 2] {
            for _ in 0..20 {
                let y: Vec<f64> = (0..20).map(|_| rng.gen_range(-10.0..10.0)).collect();
                let p = fit_regression(&s(y.clone()), degree).unwrap();
                assert!(normal_equation_residual(&y, &p) < 1e-8);
            }
        }
    }

    #[test]
    fn forecasts() {
        let line = RegressionParams {
            coefficients: vec![3.0, 2.0],
            degree: 1,
            time_origin: 0,
        };
        assert_eq!(forecast_regression(&line, 5, 2), vec![13.0, 15.0]);
        let zero = RegressionParams {
            coefficients: vec![0.0, 0.0, 0.0],
            degree: 2,
            time_origin: 0,
        };
        assert_eq!(forecast_regression(&zero, 9, 3), vec![0.0; 3]);
        let quad = RegressionParams {
            coefficients: vec![1.0, 0.0, 1.0],
            degree: 2,
            time_origin: 0,
        };
        assert_eq!(forecast_regression(&quad, 3, 1), vec![10.0]);
    }

    #[test]
    fn too_short_for_degree() {
        assert!(matches!(
            fit_regression(&s(vec![1., 2., 3.]), 2),
            Err(Error::SeriesTooShort { needed: 4, .. })
        ));
    }
}
