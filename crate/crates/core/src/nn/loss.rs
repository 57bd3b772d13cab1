use serde::{Deserialize, Serialize};

/// Probability clamp inside the cross-entropy.
pub const EPS_PROB: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// Euclidean norm of the residual (not squared).
    L2,
    /// Mean binary cross-entropy over the output bits.
    Bce,
}

pub fn loss_l2(pred: &[f64], target: &[f64]) -> f64 {
    debug_assert_eq!(pred.len(), target.len());
    pred.iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        .sqrt()
}

pub fn loss_bce(probs: &[f64], bits: &[f64]) -> f64 {
    debug_assert_eq!(probs.len(), bits.len());
    if probs.is_empty() {
        return 0.0;
    }
    let sum: f64 = probs
        .iter()
        .zip(bits)
        .map(|(&p, &a)| {
            let p = p.clamp(EPS_PROB, 1.0 - EPS_PROB);
            a * p.ln() + (1.0 - a) * (1.0 - p).ln()
        })
        .sum();
    -sum / probs.len() as f64
}
