// SPDX-License-Identifier: MIT OR Apache-2.0

//! Single-layer LSTM regressor trained from scratch with BPTT and Adam.
//!
//! Gate equations (no biases unless `gate_bias` is enabled):
//!
//! ```text
//! f_t  = σ(y_t U_f + h_t W_f)
//! C~_t = tanh(y_t U_C + h_t W_C)
//! i_t  = σ(y_t U_i + h_t W_i)
//! C_t  = i_t ⊙ C~_t + f_t ⊙ C_{t-1}
//! o_t  = σ(y_t U_o + h_t W_o)
//! h_{t+1} = o_t ⊙ tanh(C_t)
//! ```
//!
//! The scalar forecast is an affine read-out of the final hidden output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::Series;

/// Gate order used for the internal arrays.
const FORGET: usize = 0;
const INPUT: usize = 1;
const CANDIDATE: usize = 2;
const OUTPUT: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LstmTrainConfig {
    pub hidden_size: usize,
    pub lookback: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub gate_bias: bool,
    pub seed: u64,
}

impl Default for LstmTrainConfig {
    fn default() -> Self {
        Self {
            hidden_size: 16,
            lookback: 12,
            epochs: 200,
            learning_rate: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            gate_bias: false,
            seed: 0,
        }
    }
}

/// z-score transform fitted on training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: f64,
    pub scale: f64,
}

impl Normalization {
    pub fn fit(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        let scale = if sd > 1e-12 * mean.abs().max(1.0) { sd } else { 1.0 };
        Self { mean, scale }
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.scale
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.scale + self.mean
    }
}

/// Network weights. `w[g]` is row-major `hidden x hidden` with rows indexed
/// by the source unit, so `(h W)_j = sum_k h_k W[k][j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "WeightsRepr", try_from = "WeightsRepr")]
pub struct LstmWeights {
    hidden_size: usize,
    u: [Vec<f64>; 4],
    w: [Vec<f64>; 4],
    bias: Option<[Vec<f64>; 4]>,
    readout: Vec<f64>,
    readout_bias: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsRepr {
    hidden_size: usize,
    u_f: Vec<f64>,
    w_f: Vec<f64>,
    u_i: Vec<f64>,
    w_i: Vec<f64>,
    u_c: Vec<f64>,
    w_c: Vec<f64>,
    u_o: Vec<f64>,
    w_o: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gate_bias: Option<[Vec<f64>; 4]>,
    readout: Vec<f64>,
    readout_bias: f64,
}

impl From<LstmWeights> for WeightsRepr {
    fn from(w: LstmWeights) -> Self {
        let [u_f, u_i, u_c, u_o] = w.u;
        let [w_f, w_i, w_c, w_o] = w.w;
        Self {
            hidden_size: w.hidden_size,
            u_f,
            w_f,
            u_i,
            w_i,
            u_c,
            w_c,
            u_o,
            w_o,
            gate_bias: w.bias,
            readout: w.readout,
            readout_bias: w.readout_bias,
        }
    }
}

impl TryFrom<WeightsRepr> for LstmWeights {
    type Error = Error;

    fn try_from(r: WeightsRepr) -> Result<Self> {
        let weights = LstmWeights {
            hidden_size: r.hidden_size,
            u: [r.u_f, r.u_i, r.u_c, r.u_o],
            w: [r.w_f, r.w_i, r.w_c, r.w_o],
            bias: r.gate_bias,
            readout: r.readout,
            readout_bias: r.readout_bias,
        };
        weights.validate()?;
        Ok(weights)
    }
}

impl LstmWeights {
    pub fn zeros(hidden_size: usize, gate_bias: bool) -> Self {
        let vec = |n| vec![0.0; n];
        Self {
            hidden_size,
            u: std::array::from_fn(|_| vec(hidden_size)),
            w: std::array::from_fn(|_| vec(hidden_size * hidden_size)),
            bias: gate_bias.then(|| std::array::from_fn(|_| vec(hidden_size))),
            readout: vec(hidden_size),
            readout_bias: 0.0,
        }
    }

    /// Uniform initialisation in `±1/sqrt(hidden_size)`; biases start at zero.
    pub fn init(hidden_size: usize, gate_bias: bool, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (hidden_size as f64).sqrt();
        let mut weights = Self::zeros(hidden_size, gate_bias);
        for g in 0..4 {
            for v in weights.u[g].iter_mut().chain(weights.w[g].iter_mut()) {
                *v = rng.gen_range(-bound..bound);
            }
        }
        for v in &mut weights.readout {
            *v = rng.gen_range(-bound..bound);
        }
        weights
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    /// Input-to-hidden weights of a gate (`0..4` = forget, input, candidate, output).
    pub fn input_weights_mut(&mut self, gate: usize) -> &mut [f64] {
        &mut self.u[gate]
    }

    pub fn recurrent_weights_mut(&mut self, gate: usize) -> &mut [f64] {
        &mut self.w[gate]
    }

    pub fn readout_mut(&mut self) -> (&mut [f64], &mut f64) {
        (&mut self.readout, &mut self.readout_bias)
    }

    fn validate(&self) -> Result<()> {
        let h = self.hidden_size;
        if h == 0 {
            return Err(Error::ShapeMismatch("hidden size must be positive".into()));
        }
        let bias_ok = self
            .bias
            .as_ref()
            .is_none_or(|b| b.iter().all(|v| v.len() == h));
        if self.u.iter().any(|v| v.len() != h)
            || self.w.iter().any(|v| v.len() != h * h)
            || self.readout.len() != h
            || !bias_ok
        {
            return Err(Error::ShapeMismatch(format!(
                "weight shapes inconsistent with hidden size {h}"
            )));
        }
        if !self.to_flat().iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite LSTM weight".into()));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        let h = self.hidden_size;
        4 * (h + h * h) + self.bias.as_ref().map_or(0, |_| 4 * h) + h + 1
    }

    /// All parameters in a fixed order.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for g in 0..4 {
            out.extend_from_slice(&self.u[g]);
            out.extend_from_slice(&self.w[g]);
        }
        if let Some(bias) = &self.bias {
            for b in bias {
                out.extend_from_slice(b);
            }
        }
        out.extend_from_slice(&self.readout);
        out.push(self.readout_bias);
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count());
        let mut rest = flat;
        let mut take = |dst: &mut [f64]| {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        };
        for g in 0..4 {
            take(&mut self.u[g]);
            take(&mut self.w[g]);
        }
        if let Some(bias) = &mut self.bias {
            for b in bias.iter_mut() {
                take(b);
            }
        }
        take(&mut self.readout);
        self.readout_bias = rest[0];
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.hidden_size, self.bias.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub hidden_size: usize,
    pub lookback: usize,
    pub seed: u64,
    pub normalization: Normalization,
    pub weights: LstmWeights,
}

impl LstmParams {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if self.weights.hidden_size != self.hidden_size {
            return Err(Error::ShapeMismatch(format!(
                "hidden size {} vs weights {}",
                self.hidden_size, self.weights.hidden_size
            )));
        }
        if self.lookback == 0 {
            return Err(Error::ShapeMismatch("lookback must be positive".into()));
        }
        if !(self.normalization.scale > 0.0 && self.normalization.mean.is_finite()) {
            return Err(Error::InvalidParameter("invalid normalization".into()));
        }
        Ok(())
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Activations recorded during a forward pass, reused across windows.
#[derive(Debug, Default)]
pub(crate) struct Trace {
    steps: usize,
    hidden: usize,
    xs: Vec<f64>,
    /// `(steps + 1) * hidden`, entry 0 is the zero initial output.
    h: Vec<f64>,
    c: Vec<f64>,
    /// `steps * 4 * hidden`: f, i, C~, o.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl Trace {
    fn reset(&mut self, steps: usize, hidden: usize) {
        self.steps = steps;
        self.hidden = hidden;
        self.xs.clear();
        self.h.clear();
        self.h.resize((steps + 1) * hidden, 0.0);
        self.c.clear();
        self.c.resize((steps + 1) * hidden, 0.0);
        self.gates.clear();
        self.gates.resize(steps * 4 * hidden, 0.0);
        self.tanh_c.clear();
        self.tanh_c.resize(steps * hidden, 0.0);
    }

    pub(crate) fn gate(&self, t: usize, g: usize) -> &[f64] {
        let base = (t * 4 + g) * self.hidden;
        &self.gates[base..base + self.hidden]
    }

    pub(crate) fn tanh_cell(&self, t: usize) -> &[f64] {
        &self.tanh_c[t * self.hidden..(t + 1) * self.hidden]
    }

    fn final_hidden(&self) -> &[f64] {
        &self.h[self.steps * self.hidden..]
    }

    fn final_cell(&self) -> &[f64] {
        &self.c[self.steps * self.hidden..]
    }
}

impl LstmWeights {
    /// Runs the window and returns the normalised read-out.
    pub(crate) fn forward(&self, window: &[f64], trace: &mut Trace) -> f64 {
        let hs = self.hidden_size;
        trace.reset(window.len(), hs);
        trace.xs.extend_from_slice(window);
        let mut pre = vec![0.0; 4 * hs];
        for (t, &x) in window.iter().enumerate() {
            let (h_done, h_rest) = trace.h.split_at_mut((t + 1) * hs);
            let h_prev = &h_done[t * hs..];
            for g in 0..4 {
                let row = &mut pre[g * hs..(g + 1) * hs];
                let u = &self.u[g];
                match &self.bias {
                    Some(b) => {
                        for j in 0..hs {
                            row[j] = x * u[j] + b[g][j];
                        }
                    }
                    None => {
                        for j in 0..hs {
                            row[j] = x * u[j];
                        }
                    }
                }
                let w = &self.w[g];
                for (k, &hk) in h_prev.iter().enumerate() {
                    if hk == 0.0 {
                        continue;
                    }
                    let wk = &w[k * hs..(k + 1) * hs];
                    for j in 0..hs {
                        row[j] += hk * wk[j];
                    }
                }
            }
            let gates = &mut trace.gates[t * 4 * hs..(t + 1) * 4 * hs];
            for j in 0..hs {
                gates[FORGET * hs + j] = sigmoid(pre[FORGET * hs + j]);
                gates[INPUT * hs + j] = sigmoid(pre[INPUT * hs + j]);
                gates[CANDIDATE * hs + j] = pre[CANDIDATE * hs + j].tanh();
                gates[OUTPUT * hs + j] = sigmoid(pre[OUTPUT * hs + j]);
            }
            let (c_done, c_rest) = trace.c.split_at_mut((t + 1) * hs);
            let c_prev = &c_done[t * hs..];
            let c_next = &mut c_rest[..hs];
            let h_next = &mut h_rest[..hs];
            let tc = &mut trace.tanh_c[t * hs..(t + 1) * hs];
            for j in 0..hs {
                c_next[j] = gates[INPUT * hs + j] * gates[CANDIDATE * hs + j]
                    + gates[FORGET * hs + j] * c_prev[j];
                tc[j] = c_next[j].tanh();
                h_next[j] = gates[OUTPUT * hs + j] * tc[j];
            }
        }
        self.readout_bias
            + self
                .readout
                .iter()
                .zip(trace.final_hidden())
                .map(|(w, h)| w * h)
                .sum::<f64>()
    }

    /// Accumulates `d_pred * d(prediction)/d(params)` into `grads`.
    pub(crate) fn backward(&self, trace: &Trace, d_pred: f64, grads: &mut LstmWeights) {
        let hs = self.hidden_size;
        let mut dh: Vec<f64> = self.readout.iter().map(|w| d_pred * w).collect();
        let mut dc = vec![0.0; hs];
        let mut da = vec![0.0; 4 * hs];
        for (g, h) in grads.readout.iter_mut().zip(trace.final_hidden()) {
            *g += d_pred * h;
        }
        grads.readout_bias += d_pred;

        for t in (0..trace.steps).rev() {
            let x = trace.xs[t];
            let h_prev = &trace.h[t * hs..(t + 1) * hs];
            let c_prev = &trace.c[t * hs..(t + 1) * hs];
            let f = trace.gate(t, FORGET);
            let i = trace.gate(t, INPUT);
            let cc = trace.gate(t, CANDIDATE);
            let o = trace.gate(t, OUTPUT);
            let tc = trace.tanh_cell(t);
            for j in 0..hs {
                let d_o = dh[j] * tc[j];
                dc[j] += dh[j] * o[j] * (1.0 - tc[j] * tc[j]);
                da[FORGET * hs + j] = dc[j] * c_prev[j] * f[j] * (1.0 - f[j]);
                da[INPUT * hs + j] = dc[j] * cc[j] * i[j] * (1.0 - i[j]);
                da[CANDIDATE * hs + j] = dc[j] * i[j] * (1.0 - cc[j] * cc[j]);
                da[OUTPUT * hs + j] = d_o * o[j] * (1.0 - o[j]);
                dc[j] *= f[j];
            }
            for g in 0..4 {
                let dag = &da[g * hs..(g + 1) * hs];
                for j in 0..hs {
                    grads.u[g][j] += x * dag[j];
                }
                if let Some(b) = &mut grads.bias {
                    for j in 0..hs {
                        b[g][j] += dag[j];
                    }
                }
                let gw = &mut grads.w[g];
                for (k, &hk) in h_prev.iter().enumerate() {
                    if hk == 0.0 {
                        continue;
                    }
                    let row = &mut gw[k * hs..(k + 1) * hs];
                    for j in 0..hs {
                        row[j] += hk * dag[j];
                    }
                }
            }
            for k in 0..hs {
                let mut acc = 0.0;
                for g in 0..4 {
                    let wk = &self.w[g][k * hs..(k + 1) * hs];
                    let dag = &da[g * hs..(g + 1) * hs];
                    for j in 0..hs {
                        acc += wk[j] * dag[j];
                    }
                }
                dh[k] = acc;
            }
        }
    }
}

/// Supervised windows: `inputs[i]` (normalised, length `lookback`) predicts `targets[i]`.
#[derive(Debug, Clone, Default)]
pub struct WindowSet {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl WindowSet {
    /// Sliding windows over an already-normalised sequence.
    pub fn from_sequence(z: &[f64], lookback: usize) -> Self {
        let mut set = WindowSet::default();
        set.extend_from_sequence(z, lookback);
        set
    }

    pub fn extend_from_sequence(&mut self, z: &[f64], lookback: usize) {
        for start in 0..z.len().saturating_sub(lookback) {
            self.inputs.push(z[start..start + lookback].to_vec());
            self.targets.push(z[start + lookback]);
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Mean squared error over the window set and its full gradient.
pub fn loss_and_gradient(weights: &LstmWeights, data: &WindowSet) -> (f64, LstmWeights) {
    let mut grads = weights.zeros_like();
    let mut trace = Trace::default();
    let n = data.len() as f64;
    let mut loss = 0.0;
    for (window, &target) in data.inputs.iter().zip(&data.targets) {
        let pred = weights.forward(window, &mut trace);
        let err = pred - target;
        loss += err * err;
        weights.backward(&trace, 2.0 * err / n, &mut grads);
    }
    (loss / n, grads)
}

pub fn mean_squared_error(weights: &LstmWeights, data: &WindowSet) -> f64 {
    let mut trace = Trace::default();
    let total: f64 = data
        .inputs
        .iter()
        .zip(&data.targets)
        .map(|(w, &t)| {
            let e = weights.forward(w, &mut trace) - t;
            e * e
        })
        .sum();
    total / data.len() as f64
}

/// Full-batch Adam on the window set. Returns the final weights and the
/// loss before each epoch plus the loss after the last one.
pub fn train_windows(
    data: &WindowSet,
    config: &LstmTrainConfig,
) -> Result<(LstmWeights, Vec<f64>)> {
    if config.hidden_size == 0 || config.lookback == 0 {
        return Err(Error::InvalidParameter(
            "hidden_size and lookback must be positive".into(),
        ));
    }
    if data.is_empty() {
        return Err(Error::InvalidParameter("no training windows".into()));
    }
    let mut weights = LstmWeights::init(config.hidden_size, config.gate_bias, config.seed);
    let mut params = weights.to_flat();
    let mut m = vec![0.0; params.len()];
    let mut v = vec![0.0; params.len()];
    let mut history = Vec::with_capacity(config.epochs + 1);
    for epoch in 0..config.epochs {
        let (loss, grads) = loss_and_gradient(&weights, data);
        if !loss.is_finite() {
            return Err(Error::DivergedLoss { epoch });
        }
        history.push(loss);
        let step = (epoch + 1) as i32;
        let bc1 = 1.0 - config.beta1.powi(step);
        let bc2 = 1.0 - config.beta2.powi(step);
        for (k, g) in grads.to_flat().into_iter().enumerate() {
            m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g;
            v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g * g;
            let m_hat = m[k] / bc1;
            let v_hat = v[k] / bc2;
            params[k] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
        weights.set_flat(&params);
    }
    let final_loss = mean_squared_error(&weights, data);
    if !final_loss.is_finite() {
        return Err(Error::DivergedLoss {
            epoch: config.epochs,
        });
    }
    history.push(final_loss);
    Ok((weights, history))
}

/// Fits an LSTM on one training series. Returns parameters and loss history.
pub fn fit_lstm_with_history(
    train: &Series,
    config: &LstmTrainConfig,
) -> Result<(LstmParams, Vec<f64>)> {
    train.ensure_len(config.lookback + 2)?;
    let normalization = Normalization::fit(train.values());
    let z: Vec<f64> = train.values().iter().map(|&v| normalization.apply(v)).collect();
    let data = WindowSet::from_sequence(&z, config.lookback);
    let (weights, history) = train_windows(&data, config)?;
    Ok((
        LstmParams {
            hidden_size: config.hidden_size,
            lookback: config.lookback,
            seed: config.seed,
            normalization,
            weights,
        },
        history,
    ))
}

pub fn fit_lstm(train: &Series, config: &LstmTrainConfig) -> Result<LstmParams> {
    fit_lstm_with_history(train, config).map(|(p, _)| p)
}

/// Trains one network on the pooled windows of several series, each
/// normalised by its own statistics. Returns one parameter set per series
/// sharing the same weights.
pub fn fit_lstm_pooled(
    trains: &[&Series],
    config: &LstmTrainConfig,
) -> Result<Vec<LstmParams>> {
    let mut data = WindowSet::default();
    let mut norms = Vec::with_capacity(trains.len());
    for s in trains {
        s.ensure_len(config.lookback + 2)?;
        let norm = Normalization::fit(s.values());
        let z: Vec<f64> = s.values().iter().map(|&v| norm.apply(v)).collect();
        data.extend_from_sequence(&z, config.lookback);
        norms.push(norm);
    }
    let (weights, _) = train_windows(&data, config)?;
    Ok(norms
        .into_iter()
        .map(|normalization| LstmParams {
            hidden_size: config.hidden_size,
            lookback: config.lookback,
            seed: config.seed,
            normalization,
            weights: weights.clone(),
        })
        .collect())
}

/// Output of [`lstm_forward`].
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    /// De-normalised prediction.
    pub prediction: f64,
    pub final_cell: Vec<f64>,
    pub final_hidden: Vec<f64>,
}

/// One pass over a normalised window of exactly `lookback` values.
pub fn lstm_forward(params: &LstmParams, window: &[f64]) -> Result<ForwardOutput> {
    if window.len() != params.lookback {
        return Err(Error::ShapeMismatch(format!(
            "window length {} but lookback is {}",
            window.len(),
            params.lookback
        )));
    }
    params.validate()?;
    let mut trace = Trace::default();
    let z = params.weights.forward(window, &mut trace);
    Ok(ForwardOutput {
        prediction: params.normalization.invert(z),
        final_cell: trace.final_cell().to_vec(),
        final_hidden: trace.final_hidden().to_vec(),
    })
}

/// Rolls `h` one-step predictions forward from the end of `context`,
/// feeding each prediction back into the next window.
pub fn forecast_lstm(params: &LstmParams, context: &[f64], h: usize) -> Result<Vec<f64>> {
    if context.len() < params.lookback {
        return Err(Error::SeriesTooShort {
            id: "context".into(),
            needed: params.lookback,
            have: context.len(),
        });
    }
    let norm = params.normalization;
    let mut window: Vec<f64> = context[context.len() - params.lookback..]
        .iter()
        .map(|&v| norm.apply(v))
        .collect();
    let mut trace = Trace::default();
    let mut out = Vec::with_capacity(h);
    for _ in 0..h {
        let z = params.weights.forward(&window, &mut trace);
        out.push(norm.invert(z));
        window.remove(0);
        window.push(z);
    }
    Ok(out)
}
