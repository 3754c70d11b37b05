// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Errors produced by the forecasting engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series `{id}` is empty")]
    EmptySeries { id: String },
    #[error("series `{id}` has a non-finite value at position {index}")]
    NonFiniteValue { id: String, index: usize },
    #[error("split of a length-{len} series at fraction {fraction} leaves too little data (train {train}, test {test})")]
    SplitTooSmall {
        len: usize,
        fraction: f64,
        train: usize,
        test: usize,
    },
    #[error("invalid split fraction {0}; must lie in (0, 1)")]
    InvalidFraction(f64),
    #[error("panel is empty after alignment or pruning")]
    EmptyPanel,
    #[error("duplicate series id `{0}`")]
    DuplicateSeriesId(String),
    #[error("panel series disagree: {0}")]
    InconsistentPanel(String),
    #[error("missing fit error for series `{0}`")]
    MissingFitError(String),
    #[error("parse error at row {row}, column `{column}`: {message}")]
    ParseError {
        row: usize,
        column: String,
        message: String,
    },
    #[error("date spacing error in series `{id}` at row {row}: {message}")]
    Spacing {
        id: String,
        row: usize,
        message: String,
    },
    #[error("io error: {0}")]
    Io(String),

    #[error("series `{id}` has a non-positive value {value} at position {index}")]
    NonPositiveValue { id: String, index: usize, value: f64 },
    #[error("series `{id}` too short: need at least {needed} observations, have {have}")]
    SeriesTooShort { id: String, needed: usize, have: usize },
    #[error("singular regression design")]
    SingularDesign,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("LSTM training diverged at epoch {epoch}")]
    DivergedLoss { epoch: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("ensemble needs at least 2 members, got {0}")]
    TooFewMembers(usize),
    #[error("member key sets differ: {0}")]
    KeyMismatch(String),
    #[error("member `{member}` failed: {source}")]
    MemberFitFailure {
        member: String,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid retrain schedule: {0}")]
    InvalidSchedule(String),

    #[error("denominator within 1e-9 of zero at steps {0:?}")]
    NearZeroDenominator(Vec<usize>),
    #[error("empty input")]
    EmptyInput,
    #[error("baseline MAPE is zero; relative change undefined")]
    ZeroBaseline,
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
