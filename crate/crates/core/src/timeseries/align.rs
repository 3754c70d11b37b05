// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Panel, Series};
use crate::error::{Error, Result};

/// Result of [`align_panel`].
#[derive(Debug, Clone, PartialEq)]
pub struct AlignOutcome {
    pub panel: Panel,
    /// Common length every surviving series was truncated to.
    pub cutoff: usize,
    /// Ids of series shorter than the cutoff.
    pub dropped: Vec<String>,
}

/// Result of [`prune_irregular`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneOutcome {
    pub panel: Panel,
    pub dropped: Vec<String>,
    pub median_error: f64,
}

const MIN_ALIGNED_LEN: usize = 2;

/// Chooses the common length `L` maximising `L * #{series with len >= L}`.
///
/// Only observed lengths are candidates (the objective grows between them).
/// Ties go to the larger `L`. Survivors keep their most recent `L` points.
pub fn align_panel(raw: Vec<Series>) -> Result<AlignOutcome> {
    if raw.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let mut seen = BTreeSet::new();
    for s in &raw {
        if !seen.insert(s.id()) {
            return Err(Error::DuplicateSeriesId(s.id().to_string()));
        }
    }
    // A single point cannot be split or fitted; such series never survive.
    let (raw, too_short): (Vec<Series>, Vec<Series>) =
        raw.into_iter().partition(|s| s.len() >= MIN_ALIGNED_LEN);
    if raw.is_empty() {
        return Err(Error::EmptyPanel);
    }

    let mut lengths: Vec<usize> = raw.iter().map(Series::len).collect();
    lengths.sort_unstable_by(|a, b| b.cmp(a));
    // Walking lengths in decreasing order, the series count at a candidate
    // is its position + 1 among equal-or-longer series.
    let mut best = (0usize, 0usize);
    let mut i = 0;
    while i < lengths.len() {
        let len = lengths[i];
        while i + 1 < lengths.len() && lengths[i + 1] == len {
            i += 1;
        }
        let points = len * (i + 1);
        if points > best.0 {
            best = (points, len);
        }
        i += 1;
    }
    let cutoff = best.1;

    let mut kept = Vec::new();
    let mut dropped: Vec<String> = too_short.iter().map(|s| s.id().to_string()).collect();
    for s in raw {
        if s.len() >= cutoff {
            kept.push(s.tail(cutoff)?);
        } else {
            dropped.push(s.id().to_string());
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyPanel);
    }
    Ok(AlignOutcome {
        panel: Panel::new(kept)?,
        cutoff,
        dropped,
    })
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Drops series whose fit error exceeds `ratio_threshold` times the median
/// fit error of the whole panel.
pub fn prune_irregular(
    panel: Panel,
    fit_errors: &BTreeMap<String, f64>,
    ratio_threshold: f64,
) -> Result<PruneOutcome> {
    if !(ratio_threshold.is_finite() && ratio_threshold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ratio threshold must be positive, got {ratio_threshold}"
        )));
    }
    let mut errors = Vec::with_capacity(panel.len());
    for s in panel.series() {
        let e = *fit_errors
            .get(s.id())
            .ok_or_else(|| Error::MissingFitError(s.id().to_string()))?;
        if !(e.is_finite() && e >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "fit error for `{}` must be finite and nonnegative, got {e}",
                s.id()
            )));
        }
        errors.push(e);
    }
    let median_error = median(&errors);
    let bound = ratio_threshold * median_error;

    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (s, e) in panel.into_series().into_iter().zip(errors) {
        if e > bound {
            dropped.push(s.id().to_string());
        } else {
            kept.push(s);
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyPanel);
    }
    Ok(PruneOutcome {
        panel: Panel::new(kept)?,
        dropped,
        median_error,
    })
}
