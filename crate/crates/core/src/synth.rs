// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded synthetic panels standing in for non-shippable datasets.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{Frequency, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    /// Exact straight line.
    Affine,
    /// Piecewise-linear trend with one slope change, plus noise.
    TrendBreak,
    /// Mean-reverting AR(1) around a constant level.
    Ar1,
    /// Compounding growth with multiplicative noise.
    Geometric,
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "affine" => Ok(SynthKind::Affine),
            "trend-break" | "affine-break" => Ok(SynthKind::TrendBreak),
            "ar1" => Ok(SynthKind::Ar1),
            "geometric" => Ok(SynthKind::Geometric),
            other => Err(Error::InvalidParameter(format!("unknown generator `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub n_series: usize,
    pub length: usize,
    pub frequency: Frequency,
    pub seed: u64,
    /// Period index of the first observation.
    pub start: i64,
}

impl SynthSpec {
    pub fn new(kind: SynthKind, n_series: usize, length: usize, frequency: Frequency, seed: u64) -> Self {
        let start = match frequency {
            Frequency::Annual => 1980,
            Frequency::Quarterly => 1990 * 4,
            Frequency::Monthly => 2000 * 12,
            // 2015-01-05, a Monday
            Frequency::Daily => 735_603,
        };
        Self {
            kind,
            n_series,
            length,
            frequency,
            seed,
            start,
        }
    }
}

fn affine(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let a = rng.gen_range(50.0..150.0);
    let b = rng.gen_range(0.5..2.0);
    (0..n).map(|t| a + b * t as f64).collect()
}

fn trend_break(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let level: f64 = rng.gen_range(80.0..120.0);
    let slope = rng.gen_range(0.2..1.0);
    let after = slope * rng.gen_range(-0.5..2.5);
    let at = ((n as f64) * rng.gen_range(0.35..0.65)) as usize;
    let noise = Normal::new(0.0, 0.01 * level).unwrap();
    let mut y = Vec::with_capacity(n);
    let mut trend: f64 = level;
    for t in 0..n {
        trend += if t < at { slope } else { after };
        y.push((trend + noise.sample(rng)).max(1.0));
    }
    y
}

fn ar1(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let level: f64 = rng.gen_range(50.0..150.0);
    let phi = rng.gen_range(0.5..0.9);
    let noise = Normal::new(0.0, 0.02 * level).unwrap();
    let mut dev: f64 = 0.0;
    (0..n)
        .map(|_| {
            dev = phi * dev + noise.sample(rng);
            (level + dev).max(1.0)
        })
        .collect()
}

fn geometric(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut y = rng.gen_range(20.0..200.0);
    let rate = rng.gen_range(0.002..0.02);
    let noise = Normal::new(0.0, 0.005).unwrap();
    (0..n)
        .map(|_| {
            y *= (1.0 + rate) * (1.0 + noise.sample(rng));
            y
        })
        .collect()
}

pub fn generate(spec: &SynthSpec) -> Result<Vec<Series>> {
    if spec.n_series == 0 || spec.length < 2 {
        return Err(Error::InvalidParameter(
            "synthetic panel needs at least one series of length >= 2".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.n_series)
        .map(|i| {
            let values = match spec.kind {
                SynthKind::Affine => affine(&mut rng, spec.length),
                SynthKind::TrendBreak => trend_break(&mut rng, spec.length),
                SynthKind::Ar1 => ar1(&mut rng, spec.length),
                SynthKind::Geometric => geometric(&mut rng, spec.length),
            };
            Series::new(format!("S{:02}", i + 1), spec.frequency, spec.start, values)
        })
        .collect()
}
