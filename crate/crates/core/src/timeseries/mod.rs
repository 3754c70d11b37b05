// SPDX-License-Identifier: MIT OR Apache-2.0

//! Series and panel representations.

mod align;
mod ingest;

pub use align::{align_panel, prune_irregular, AlignOutcome, PruneOutcome};
pub use ingest::{load_panel_csv, period_date, read_panel_csv, render_wide_csv, CsvLayout, CsvSchema};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Sampling frequency of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Annual,
    Quarterly,
    Monthly,
    Daily,
}

impl Frequency {
    pub const ALL: [Frequency; 4] = [
        Frequency::Annual,
        Frequency::Quarterly,
        Frequency::Monthly,
        Frequency::Daily,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Frequency::Annual => "annual",
            Frequency::Quarterly => "quarterly",
            Frequency::Monthly => "monthly",
            Frequency::Daily => "daily",
        }
    }

    /// Native-period equivalents of the "one and five years/months" retrain points.
    pub fn default_schedule(self) -> Vec<usize> {
        match self {
            Frequency::Annual => vec![1, 5],
            Frequency::Quarterly => vec![4, 20],
            Frequency::Monthly => vec![12, 60],
            Frequency::Daily => vec![21, 105],
        }
    }

    /// Default LSTM lookback window.
    pub fn default_lookback(self) -> usize {
        match self {
            Frequency::Annual => 4,
            Frequency::Quarterly => 8,
            Frequency::Monthly => 12,
            Frequency::Daily => 20,
        }
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Frequency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "annual" | "yearly" => Ok(Frequency::Annual),
            "quarterly" => Ok(Frequency::Quarterly),
            "monthly" => Ok(Frequency::Monthly),
            "daily" => Ok(Frequency::Daily),
            other => Err(Error::InvalidParameter(format!("unknown frequency `{other}`"))),
        }
    }
}

/// One univariate time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    id: String,
    frequency: Frequency,
    start: i64,
    values: Vec<f64>,
}

impl Series {
    /// Builds a series, rejecting empty or non-finite data.
    pub fn new(
        id: impl Into<String>,
        frequency: Frequency,
        start: i64,
        values: Vec<f64>,
    ) -> Result<Self> {
        let id = id.into();
        if values.is_empty() {
            return Err(Error::EmptySeries { id });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { id, index });
        }
        Ok(Self {
            id,
            frequency,
            start,
            values,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    /// Period index of the first observation.
    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Chronological sub-range `[from, to)` as a new series.
    pub fn slice(&self, from: usize, to: usize) -> Result<Series> {
        Series::new(
            self.id.clone(),
            self.frequency,
            self.start + from as i64,
            self.values[from..to].to_vec(),
        )
    }

    /// Most recent `len` observations.
    pub fn tail(&self, len: usize) -> Result<Series> {
        self.slice(self.len() - len, self.len())
    }

    /// New series with `extra` appended after the last observation.
    pub fn extended(&self, extra: &[f64]) -> Result<Series> {
        let mut values = self.values.clone();
        values.extend_from_slice(extra);
        Series::new(self.id.clone(), self.frequency, self.start, values)
    }

    pub(crate) fn ensure_len(&self, needed: usize) -> Result<()> {
        if self.len() < needed {
            return Err(Error::SeriesTooShort {
                id: self.id.clone(),
                needed,
                have: self.len(),
            });
        }
        Ok(())
    }
}

/// Aligned collection of equal-length series sharing one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    series: Vec<Series>,
    frequency: Frequency,
    length: usize,
}

impl Panel {
    pub fn new(series: Vec<Series>) -> Result<Self> {
        let first = series.first().ok_or(Error::EmptyPanel)?;
        let frequency = first.frequency();
        let length = first.len();
        let mut ids = BTreeSet::new();
        for s in &series {
            if s.frequency() != frequency {
                return Err(Error::InconsistentPanel(format!(
                    "series `{}` is {} but panel is {}",
                    s.id(),
                    s.frequency(),
                    frequency
                )));
            }
            if s.len() != length {
                return Err(Error::InconsistentPanel(format!(
                    "series `{}` has length {} but panel length is {}",
                    s.id(),
                    s.len(),
                    length
                )));
            }
            if !ids.insert(s.id()) {
                return Err(Error::DuplicateSeriesId(s.id().to_string()));
            }
        }
        Ok(Self {
            series,
            frequency,
            length,
        })
    }

    pub fn series(&self) -> &[Series] {
        &self.series
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.id() == id)
    }

    /// SHA-256 over ids, frequency, start indices and value bit patterns.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.frequency.as_str().as_bytes());
        for s in &self.series {
            hasher.update([0u8]);
            hasher.update(s.id().as_bytes());
            hasher.update([0u8]);
            hasher.update(s.start().to_le_bytes());
            for v in s.values() {
                hasher.update(v.to_bits().to_le_bytes());
            }
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn into_series(self) -> Vec<Series> {
        self.series
    }

    /// Splits every series into a history of `length - horizon` points and
    /// a holdout of the final `horizon` points.
    pub fn holdout(&self, horizon: usize) -> Result<(Panel, Panel)> {
        if horizon == 0 || horizon + 2 > self.length {
            return Err(Error::InvalidParameter(format!(
                "holdout of {horizon} from panel length {} leaves fewer than 2 history points",
                self.length
            )));
        }
        let cut = self.length - horizon;
        let mut history = Vec::with_capacity(self.series.len());
        let mut holdout = Vec::with_capacity(self.series.len());
        for s in &self.series {
            history.push(s.slice(0, cut)?);
            holdout.push(s.slice(cut, self.length)?);
        }
        Ok((Panel::new(history)?, Panel::new(holdout)?))
    }
}

/// Train/test split ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
        }
    }
}

/// Splits a series into a chronological train prefix of
/// `floor(train_fraction * N)` points and the remaining test suffix.
pub fn split_train_test(series: &Series, spec: SplitSpec) -> Result<(Series, Series)> {
    let fraction = spec.train_fraction;
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidFraction(fraction));
    }
    let len = series.len();
    let train = (fraction * len as f64).floor() as usize;
    let test = len - train;
    if train < 2 || test < 1 {
        return Err(Error::SplitTooSmall {
            len,
            fraction,
            train,
            test,
        });
    }
    Ok((series.slice(0, train)?, series.slice(train, len)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(values: Vec<f64>) -> Series {
        Series::new("s", Frequency::Annual, 0, values).unwrap()
    }

    #[test]
    fn split_length_ten() {
        let s = series((0..10).map(f64::from).collect());
        let (train, test) = split_train_test(&s, SplitSpec::default()).unwrap();
        assert_eq!(train.values(), &[0., 1., 2., 3., 4., 5., 6., 7.]);
        assert_eq!(test.values(), &[8., 9.]);
        assert_eq!(test.start(), 8);
    }

    #[test]
    fn split_length_five() {
        let s = series(vec![1., 2., 3., 4., 5.]);
        let (train, test) = split_train_test(&s, SplitSpec::default()).unwrap();
        assert_eq!(train.len(), 4);
        assert_eq!(test.values(), &[5.]);
    }

    #[test]
    fn split_length_two_is_too_small() {
        let s = series(vec![1., 2.]);
        assert!(matches!(
            split_train_test(&s, SplitSpec::default()),
            Err(Error::SplitTooSmall { train: 1, .. })
        ));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            Series::new("x", Frequency::Monthly, 0, vec![1.0, f64::NAN]),
            Err(Error::NonFiniteValue { index: 1, .. })
        ));
        assert!(Series::new("x", Frequency::Monthly, 0, vec![]).is_err());
    }

    #[test]
    fn panel_rejects_mismatch() {
        let a = Series::new("a", Frequency::Annual, 0, vec![1., 2.]).unwrap();
        let b = Series::new("b", Frequency::Annual, 0, vec![1., 2., 3.]).unwrap();
        assert!(matches!(
            Panel::new(vec![a.clone(), b]),
            Err(Error::InconsistentPanel(_))
        ));
        assert!(matches!(
            Panel::new(vec![a.clone(), a]),
            Err(Error::DuplicateSeriesId(_))
        ));
    }

    proptest! {
        #[test]
        fn split_then_concat_is_identity(
            values in prop::collection::vec(-1e6f64..1e6, 3..200),
            fraction in 0.05f64..0.95,
        ) {
            let s = series(values.clone());
            if let Ok((train, test)) = split_train_test(&s, SplitSpec { train_fraction: fraction }) {
                prop_assert_eq!(train.len(), (fraction * values.len() as f64).floor() as usize);
                let mut joined = train.values().to_vec();
                joined.extend_from_slice(test.values());
                prop_assert_eq!(joined, values);
            }
        }
    }
}
