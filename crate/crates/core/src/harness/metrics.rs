use serde::{Deserialize, Serialize};

use crate::datagen::LabeledInstance;
use crate::nn::{MlpModel, NnError};

/// Percentile by linear interpolation between order statistics: position
/// `h = (n − 1)·q` in the sorted sample, interpolated between `⌊h⌋` and `⌈h⌉`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub mean_l1: f64,
    pub p70: f64,
    pub p80: f64,
    pub p90: f64,
}

impl ErrorSummary {
    pub fn from_errors(errors: &[f64]) -> Self {
        let mut s = errors.to_vec();
        s.sort_by(f64::total_cmp);
        Self {
            mean_l1: s.iter().sum::<f64>() / s.len() as f64,
            p70: percentile(&s, 0.7),
            p80: percentile(&s, 0.8),
            p90: percentile(&s, 0.9),
        }
    }
}

/// Per-instance `‖y − ĥ(x)‖₁` on `test`.
pub fn l1_errors(model: &MlpModel, test: &[LabeledInstance]) -> Result<Vec<f64>, NnError> {
    test.iter()
        .map(|t| {
            let pred = model.forward(t.x.values())?;
            Ok(pred.iter().zip(t.y.target()).map(|(p, y)| (p - y).abs()).sum())
        })
        .collect()
}

pub fn compute_metrics(model: &MlpModel, test: &[LabeledInstance]) -> Result<ErrorSummary, NnError> {
    assert!(!test.is_empty(), "empty test set");
    Ok(ErrorSummary::from_errors(&l1_errors(model, test)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_to_ten() {
        let e: Vec<f64> = (1..=10).map(f64::from).collect();
        let s = ErrorSummary::from_errors(&e);
        assert!((s.p90 - 9.1).abs() < 1e-12);
        assert!((s.p80 - 8.2).abs() < 1e-12);
        assert!((s.p70 - 7.3).abs() < 1e-12);
        assert_eq!(s.mean_l1, 5.5);
    }

    #[test]
    fn single_value_and_zeros() {
        assert_eq!(percentile(&[4.0], 0.9), 4.0);
        let s = ErrorSummary::from_errors(&[0.0; 5]);
        assert_eq!((s.mean_l1, s.p70, s.p80, s.p90), (0.0, 0.0, 0.0, 0.0));
    }
}
