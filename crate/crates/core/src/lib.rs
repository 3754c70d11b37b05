// SPDX-License-Identifier: MIT OR Apache-2.0

//! Ensembled direct multi-step (EDMS) forecasting.
//!
//! Five members (average growth, linear and quadratic trend regression,
//! Holt smoothing, and an LSTM) are combined with weights derived from
//! their held-out MAE. EDMS refits the ensemble at a few horizon steps on
//! the series extended by its own combined forecasts; EIMS, the baseline,
//! fits once and iterates.

pub mod ensemble;
pub mod error;
pub mod eval;
pub mod models;
pub mod pipeline;
pub mod seed;
pub mod synth;
pub mod timeseries;

pub use error::{Error, Result};
