//! Small fully connected networks with hand-written backpropagation.
//!
//! One type serves both the solution proxy (identity head, ℓ2 loss) and the
//! active-set predictor (elementwise logistic head, binary cross-entropy).
//! Inputs are standardized inside the model, and the proxy head maps its raw
//! output through a fixed per-output affine, so every public function takes and
//! returns values in physical units.

mod loss;
mod train;

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::opf::ActiveSet;
use crate::rng::StreamRng;

pub use loss::{loss_bce, loss_l2, LossKind, EPS_PROB};
pub use train::{train, Adam, TrainConfig, TrainReport};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("model has {0} layer(s); a penultimate layer needs at least 2")]
    NoPenultimate(usize),
    #[error("training diverged at epoch {epoch} (loss is NaN)")]
    Diverged { epoch: usize },
    #[error("empty training set")]
    EmptyDataset,
    #[error("loss kind {loss:?} does not match the model head {head:?}")]
    HeadMismatch { loss: LossKind, head: Head },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Softplus,
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Softplus => softplus(z),
            Activation::Relu => z.max(0.0),
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Softplus => logistic(z),
            Activation::Relu => f64::from(u8::from(z > 0.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    Identity,
    Logistic,
}

pub fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else if z < -30.0 {
        z.exp()
    } else {
        z.exp().ln_1p()
    }
}

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Per-feature affine `(v − mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// Column statistics of `rows`; near-constant columns get unit scale.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Layer widths plus a flat parameter vector. Layer `l` stores its row-major
/// `out × in` weight matrix followed by its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    dims: Vec<usize>,
    params: Vec<f64>,
    offsets: Vec<usize>,
    activation: Activation,
    head: Head,
    input: Standardizer,
    output: Standardizer,
}

impl MlpModel {
    /// Zero-initialized model; `dims = [input, hidden.., output]`.
    pub fn zeros(dims: &[usize], activation: Activation, head: Head) -> Self {
        assert!(dims.len() >= 2, "need at least an input and an output width");
        assert!(dims.iter().all(|&d| d > 0), "layer widths must be positive");
        let mut offsets = Vec::with_capacity(dims.len());
        let mut total = 0;
        for w in dims.windows(2) {
            offsets.push(total);
            total += w[0] * w[1] + w[1];
        }
        offsets.push(total);
        Self {
            dims: dims.to_vec(),
            params: vec![0.0; total],
            offsets,
            activation,
            head,
            input: Standardizer::identity(dims[0]),
            output: Standardizer::identity(dims[dims.len() - 1]),
        }
    }

    /// Fan-in scaled uniform init: every weight and bias of layer `l` is drawn from
    /// `U(−1/√in_l, 1/√in_l)`.
    pub fn new(dims: &[usize], activation: Activation, head: Head, rng: &mut StreamRng) -> Self {
        let mut m = Self::zeros(dims, activation, head);
        for l in 0..m.num_layers() {
            let bound = 1.0 / (m.dims[l] as f64).sqrt();
            let (lo, hi) = (m.offsets[l], m.offsets[l + 1]);
            for p in &mut m.params[lo..hi] {
                *p = rng.random_range(-bound..bound);
            }
        }
        m
    }

    /// `hidden_layers` layers of width `max(64, 4·input)` between input and output.
    pub fn default_dims(input: usize, output: usize, hidden_layers: usize) -> Vec<usize> {
        let width = (4 * input).max(64);
        let mut d = vec![input];
        d.extend(std::iter::repeat_n(width, hidden_layers));
        d.push(output);
        d
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        self.dims[self.dims.len() - 1]
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn input_standardizer(&self) -> &Standardizer {
        &self.input
    }

    pub fn output_standardizer(&self) -> &Standardizer {
        &self.output
    }

    pub fn set_input_standardizer(&mut self, s: Standardizer) {
        assert_eq!(s.dim(), self.input_dim());
        self.input = s;
    }

    /// Only meaningful for the identity head; the logistic head ignores it.
    pub fn set_output_standardizer(&mut self, s: Standardizer) {
        assert_eq!(s.dim(), self.output_dim());
        self.output = s;
    }

    fn weight_range(&self, l: usize) -> std::ops::Range<usize> {
        let start = self.offsets[l];
        start..start + self.dims[l] * self.dims[l + 1]
    }

    fn bias_range(&self, l: usize) -> std::ops::Range<usize> {
        let start = self.offsets[l] + self.dims[l] * self.dims[l + 1];
        start..self.offsets[l + 1]
    }

    /// Mutable views of layer `l`'s weights and bias.
    pub fn layer_mut(&mut self, l: usize) -> (&mut [f64], &mut [f64]) {
        let w = self.weight_range(l);
        let split = w.end;
        let (head, tail) = self.params.split_at_mut(split);
        let b_len = self.dims[l + 1];
        (&mut head[w.start..], &mut tail[..b_len])
    }

    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        (&self.params[self.weight_range(l)], &self.params[self.bias_range(l)])
    }

    fn check_input(&self, x: &[f64]) -> Result<(), NnError> {
        if x.len() != self.input_dim() {
            return Err(NnError::Dimension {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Run the network, recording every layer's pre-activation and activation.
    /// `acts[0]` is the standardized input; `pre[l]` feeds layer `l`'s output.
    fn forward_trace(&self, x: &[f64], trace: &mut Trace) {
        trace.acts[0].clear();
        trace.acts[0].extend(
            x.iter()
                .zip(&self.input.mean)
                .zip(&self.input.scale)
                .map(|((v, m), s)| (v - m) / s),
        );
        let last = self.num_layers() - 1;
        for l in 0..=last {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let (w, b) = self.layer(l);
            let (before, after) = trace.acts.split_at_mut(l + 1);
            let input = &before[l];
            let z = &mut trace.pre[l];
            z.clear();
            z.extend((0..n_out).map(|o| b[o] + dot(&w[o * n_in..(o + 1) * n_in], input)));
            let out = &mut after[0];
            out.clear();
            if l < last {
                out.extend(z.iter().map(|&v| self.activation.apply(v)));
            } else {
                match self.head {
                    Head::Identity => out.extend(
                        z.iter()
                            .zip(&self.output.mean)
                            .zip(&self.output.scale)
                            .map(|((v, m), s)| m + s * v),
                    ),
                    Head::Logistic => out.extend(z.iter().map(|&v| logistic(v))),
                }
            }
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        self.check_input(x)?;
        let mut t = Trace::new(self);
        self.forward_trace(x, &mut t);
        Ok(t.acts.pop().unwrap())
    }

    /// Activations of the last hidden layer.
    pub fn penultimate(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        if self.num_layers() < 2 {
            return Err(NnError::NoPenultimate(self.num_layers()));
        }
        self.check_input(x)?;
        let mut t = Trace::new(self);
        self.forward_trace(x, &mut t);
        Ok(t.acts[self.num_layers() - 1].clone())
    }

    /// Apply the final affine layer and head to penultimate features.
    pub fn head_from_penultimate(&self, features: &[f64]) -> Vec<f64> {
        let l = self.num_layers() - 1;
        let (w, b) = self.layer(l);
        let n_in = self.dims[l];
        (0..self.output_dim())
            .map(|o| {
                let z = b[o] + dot(&w[o * n_in..(o + 1) * n_in], features);
                match self.head {
                    Head::Identity => self.output.mean[o] + self.output.scale[o] * z,
                    Head::Logistic => logistic(z),
                }
            })
            .collect()
    }

    /// Backpropagate `loss` at `(x, target)`. Accumulates into `grad` (same layout as
    /// the parameters) when given, and returns the loss value and the gradient with
    /// respect to the raw input.
    fn backward(
        &self,
        x: &[f64],
        target: &[f64],
        loss: LossKind,
        trace: &mut Trace,
        grad: Option<&mut [f64]>,
        want_input: bool,
    ) -> (f64, Option<Vec<f64>>) {
        self.forward_trace(x, trace);
        let last = self.num_layers() - 1;
        let output = &trace.acts[last + 1];
        // Gradient with respect to the final pre-activation.
        let delta = &mut trace.delta;
        delta.clear();
        let value = match loss {
            LossKind::L2 => {
                let value = loss_l2(output, target);
                if value > 0.0 {
                    delta.extend(
                        output
                            .iter()
                            .zip(target)
                            .zip(&self.output.scale)
                            .map(|((p, t), s)| s * (p - t) / value),
                    );
                } else {
                    delta.resize(output.len(), 0.0);
                }
                value
            }
            LossKind::Bce => {
                let k = output.len() as f64;
                delta.extend(output.iter().zip(target).map(|(p, t)| (p - t) / k));
                loss_bce(output, target)
            }
        };
        let mut grad = grad;
        for l in (0..=last).rev() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let input = &trace.acts[l];
            if let Some(g) = grad.as_deref_mut() {
                let w_start = self.offsets[l];
                let b_start = w_start + n_in * n_out;
                for (o, &d) in trace.delta.iter().enumerate() {
                    if d != 0.0 {
                        let row = &mut g[w_start + o * n_in..w_start + (o + 1) * n_in];
                        for (gw, a) in row.iter_mut().zip(input) {
                            *gw += d * a;
                        }
                    }
                    g[b_start + o] += d;
                }
            }
            if l == 0 && !want_input {
                break;
            }
            let (w, _) = self.layer(l);
            let prev = &mut trace.prev;
            prev.clear();
            prev.resize(n_in, 0.0);
            for (o, &d) in trace.delta.iter().enumerate() {
                if d != 0.0 {
                    for (p, a) in prev.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *p += d * a;
                    }
                }
            }
            if l > 0 {
                for (p, z) in prev.iter_mut().zip(&trace.pre[l - 1]) {
                    *p *= self.activation.derivative(*z);
                }
            }
            std::mem::swap(&mut trace.delta, &mut trace.prev);
        }
        let input_grad = want_input.then(|| {
            trace
                .delta
                .iter()
                .zip(&self.input.scale)
                .map(|(d, s)| d / s)
                .collect()
        });
        (value, input_grad)
    }

    /// `∇_x ‖y − ĥ(x)‖`. Zero at zero residual.
    pub fn input_gradient(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, NnError> {
        self.check_input(x)?;
        self.check_target(y)?;
        let mut t = Trace::new(self);
        Ok(self.backward(x, y, LossKind::L2, &mut t, None, true).1.unwrap())
    }

    /// Gradient of the per-sample loss with respect to every parameter.
    pub fn param_gradient(&self, x: &[f64], target: &[f64], loss: LossKind) -> Result<(f64, Vec<f64>), NnError> {
        self.check_input(x)?;
        self.check_target(target)?;
        let mut t = Trace::new(self);
        let mut g = vec![0.0; self.params.len()];
        let (value, _) = self.backward(x, target, loss, &mut t, Some(&mut g), false);
        Ok((value, g))
    }

    /// Per-sample loss of the model's prediction.
    pub fn loss(&self, x: &[f64], target: &[f64], loss: LossKind) -> Result<f64, NnError> {
        let out = self.forward(x)?;
        self.check_target(target)?;
        Ok(match loss {
            LossKind::L2 => loss_l2(&out, target),
            LossKind::Bce => loss_bce(&out, target),
        })
    }

    fn check_target(&self, y: &[f64]) -> Result<(), NnError> {
        if y.len() != self.output_dim() {
            return Err(NnError::Dimension {
                expected: self.output_dim(),
                got: y.len(),
            });
        }
        Ok(())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            layer_dims: self.dims.clone(),
            weights: (0..self.num_layers()).map(|l| self.layer(l).0.to_vec()).collect(),
            biases: (0..self.num_layers()).map(|l| self.layer(l).1.to_vec()).collect(),
            activation: self.activation,
            head: self.head,
            input_mean: self.input.mean.clone(),
            input_scale: self.input.scale.clone(),
            output_mean: self.output.mean.clone(),
            output_scale: self.output.scale.clone(),
        }
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self, NnError> {
        let bad = |m: &str| NnError::Checkpoint(m.to_string());
        if c.layer_dims.len() < 2 || c.layer_dims.contains(&0) {
            return Err(bad("layer_dims needs at least two positive widths"));
        }
        let mut m = Self::zeros(&c.layer_dims, c.activation, c.head);
        if c.weights.len() != m.num_layers() || c.biases.len() != m.num_layers() {
            return Err(bad("one weight and bias array per layer"));
        }
        for l in 0..m.num_layers() {
            let (w, b) = m.layer_mut(l);
            if c.weights[l].len() != w.len() || c.biases[l].len() != b.len() {
                return Err(NnError::Checkpoint(format!("layer {l} has wrong parameter count")));
            }
            w.copy_from_slice(&c.weights[l]);
            b.copy_from_slice(&c.biases[l]);
        }
        let (din, dout) = (m.input_dim(), m.output_dim());
        if c.input_mean.len() != din || c.input_scale.len() != din {
            return Err(bad("input standardization has wrong length"));
        }
        if c.output_mean.len() != dout || c.output_scale.len() != dout {
            return Err(bad("output standardization has wrong length"));
        }
        m.input = Standardizer {
            mean: c.input_mean.clone(),
            scale: c.input_scale.clone(),
        };
        m.output = Standardizer {
            mean: c.output_mean.clone(),
            scale: c.output_scale.clone(),
        };
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NnError> {
        let text = serde_json::to_string_pretty(&self.to_checkpoint()).expect("checkpoint serializes");
        std::fs::write(path, text).map_err(|e| NnError::Checkpoint(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NnError> {
        let text = std::fs::read_to_string(path).map_err(|e| NnError::Checkpoint(e.to_string()))?;
        let c: Checkpoint = serde_json::from_str(&text).map_err(|e| NnError::Checkpoint(e.to_string()))?;
        Self::from_checkpoint(&c)
    }
}

/// Scratch buffers for one forward/backward pass.
pub(crate) struct Trace {
    pre: Vec<Vec<f64>>,
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    prev: Vec<f64>,
}

impl Trace {
    pub(crate) fn new(model: &MlpModel) -> Self {
        Self {
            pre: model.dims[1..].iter().map(|&d| Vec::with_capacity(d)).collect(),
            acts: model.dims.iter().map(|&d| Vec::with_capacity(d)).collect(),
            delta: Vec::new(),
            prev: Vec::new(),
        }
    }
}

/// JSON checkpoint: layer widths, row-major weights per layer, biases, activation,
/// head and the standardization vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub activation: Activation,
    pub head: Head,
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub output_mean: Vec<f64>,
    pub output_scale: Vec<f64>,
}

/// Threshold the logistic outputs: bit `k` is set iff `p_k ≥ threshold`.
pub fn predict_active_set(model_a: &MlpModel, x: &[f64], threshold: f64) -> Result<(ActiveSet, Vec<f64>), NnError> {
    debug_assert_eq!(model_a.head(), Head::Logistic);
    let probs = model_a.forward(x)?;
    let bits = ActiveSet::from_bools(probs.iter().map(|&p| p >= threshold));
    Ok((bits, probs))
}
