use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Head, LossKind, MlpModel, NnError, Trace};
use crate::rng::SeedStreams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_adam: f64,
    /// Epochs without held-out improvement before stopping.
    pub patience: usize,
    /// Fraction of the data held out for early stopping. Datasets under ten
    /// points train on everything and monitor the training loss.
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps_adam: 1e-8,
            patience: 100,
            holdout_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: &str| Err(NnError::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam moments must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return bad("holdout fraction must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Per-epoch losses of one [`train`] call.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-sample training loss accumulated during each epoch.
    pub train_loss: Vec<f64>,
    /// Held-out loss at the end of each epoch (empty without a holdout).
    pub holdout_loss: Vec<f64>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(len: usize, cfg: &TrainConfig) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.eps_adam,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

fn mean_loss(model: &MlpModel, idx: &[usize], inputs: &[Vec<f64>], targets: &[Vec<f64>], loss: LossKind) -> f64 {
    let mut trace = Trace::new(model);
    let total: f64 = idx
        .iter()
        .map(|&i| model.backward(&inputs[i], &targets[i], loss, &mut trace, None, false).0)
        .sum();
    total / idx.len() as f64
}

/// Mini-batch Adam on `(inputs, targets)` from the model's current parameters.
///
/// Stops at `cfg.epochs` or after `cfg.patience` epochs without held-out
/// improvement, and leaves the model at its best monitored epoch.
pub fn train(
    model: &mut MlpModel,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    loss: LossKind,
    cfg: &TrainConfig,
) -> Result<TrainReport, NnError> {
    cfg.validate()?;
    if inputs.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    assert_eq!(inputs.len(), targets.len(), "inputs and targets must pair up");
    let expected_head = match loss {
        LossKind::L2 => Head::Identity,
        LossKind::Bce => Head::Logistic,
    };
    if model.head() != expected_head {
        return Err(NnError::HeadMismatch { loss, head: model.head() });
    }
    for (x, y) in inputs.iter().zip(targets) {
        model.check_input(x)?;
        model.check_target(y)?;
    }

    let mut rng = SeedStreams::new(cfg.seed).stream("train");
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    order.shuffle(&mut rng);
    let n_hold = if inputs.len() >= 10 {
        ((inputs.len() as f64 * cfg.holdout_fraction).round() as usize).min(inputs.len() - 1)
    } else {
        0
    };
    let holdout: Vec<usize> = order[..n_hold].to_vec();
    let mut fit: Vec<usize> = order[n_hold..].to_vec();

    let mut adam = Adam::new(model.params.len(), cfg);
    let mut grad = vec![0.0; model.params.len()];
    let mut trace = Trace::new(model);
    let mut report = TrainReport::default();
    let mut best = (f64::INFINITY, model.params.clone(), 0usize);
    let mut wait = 0;

    for epoch in 0..cfg.epochs {
        fit.shuffle(&mut rng);
        let mut epoch_sum = 0.0;
        for batch in fit.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let (v, _) = model.backward(&inputs[i], &targets[i], loss, &mut trace, Some(&mut grad), false);
                epoch_sum += v;
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam.step(&mut model.params, &grad);
        }
        let train_loss = epoch_sum / fit.len() as f64;
        if !train_loss.is_finite() {
            return Err(NnError::Diverged { epoch });
        }
        report.train_loss.push(train_loss);

        let monitored = if holdout.is_empty() {
            mean_loss(model, &fit, inputs, targets, loss)
        } else {
            let h = mean_loss(model, &holdout, inputs, targets, loss);
            report.holdout_loss.push(h);
            h
        };
        if !monitored.is_finite() {
            return Err(NnError::Diverged { epoch });
        }
        if monitored < best.0 {
            best = (monitored, model.params.clone(), epoch);
            wait = 0;
        } else {
            wait += 1;
            if wait >= cfg.patience {
                report.stopped_early = true;
                break;
            }
        }
    }
    model.params = best.1;
    report.best_epoch = best.2;
    Ok(report)
}
