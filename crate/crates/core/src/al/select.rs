//! Per-round building blocks: bucket scoring, budget distribution, anchor
//! filtering, candidate pooling and final selection.

use std::collections::BTreeSet;

use rand::seq::index::sample;

use crate::nn::MlpModel;
use crate::opf::ActiveSet;
use crate::rng::StreamRng;

/// Mean input-gradient norm of the proxy over one bucket's validation points.
/// An empty bucket scores 0.
pub fn acquisition_ig<'a>(
    model: &MlpModel,
    points: impl IntoIterator<Item = (&'a [f64], &'a [f64])>,
) -> Result<f64, crate::nn::NnError> {
    let (mut sum, mut n) = (0.0, 0usize);
    for (x, y) in points {
        let g = model.input_gradient(x, y)?;
        sum += g.iter().map(|v| v * v).sum::<f64>().sqrt();
        n += 1;
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// `n_b = ⌊β·s_b/Σs⌋`, then the remainder one at a time by decreasing fractional
/// part (ties to the lower bucket). All-zero scores split `β` uniformly.
pub fn distribute(scores: &[f64], budget: usize) -> Vec<usize> {
    let k = scores.len();
    if k == 0 {
        return Vec::new();
    }
    let total: f64 = scores.iter().sum();
    let shares: Vec<f64> = if total > 0.0 && total.is_finite() {
        scores.iter().map(|s| budget as f64 * s / total).collect()
    } else {
        vec![budget as f64 / k as f64; k]
    };
    let mut alloc: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let assigned: usize = alloc.iter().sum();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let fa = shares[a] - shares[a].floor();
        let fb = shares[b] - shares[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &b in order.iter().cycle().take(budget.saturating_sub(assigned)) {
        alloc[b] += 1;
    }
    alloc
}

/// Anchors chosen from one bucket's validation points.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterSelection {
    /// Highest-loss points, worst first.
    pub greedy: Vec<usize>,
    /// Uniform draws from the rest.
    pub random: Vec<usize>,
    /// Budget the bucket could not cover with its own validation points.
    pub shortfall: usize,
}

impl FilterSelection {
    pub fn anchors(&self) -> impl Iterator<Item = usize> + '_ {
        self.greedy.iter().chain(&self.random).copied()
    }
}

/// Number of greedy anchors out of `n`: `⌈ψ·n⌉`, guarded against roundoff in `ψ·n`.
pub fn greedy_count(psi: f64, n: usize) -> usize {
    ((psi * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// `⌈ψ·n_b⌉` worst points by `loss` plus uniform draws from the remainder.
/// `candidates` are `(id, loss)`; loss ties break toward the lower id.
pub fn filter_select(candidates: &[(usize, f64)], n_b: usize, psi: f64, rng: &mut StreamRng) -> FilterSelection {
    let take = n_b.min(candidates.len());
    let shortfall = n_b - take;
    let n_greedy = greedy_count(psi, n_b).min(take);
    let mut ranked = candidates.to_vec();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let greedy: Vec<usize> = ranked[..n_greedy].iter().map(|c| c.0).collect();
    let mut rest: Vec<usize> = ranked[n_greedy..].iter().map(|c| c.0).collect();
    rest.sort_unstable();
    let random = sample(rng, rest.len(), take - n_greedy)
        .into_iter()
        .map(|i| rest[i])
        .collect();
    FilterSelection {
        greedy,
        random,
        shortfall,
    }
}

/// A pool point's predicted active set, as seen by the candidate search.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolPrediction {
    pub index: usize,
    pub bits: ActiveSet,
    pub probs: Vec<f64>,
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// The `k_a` pool points closest to the anchor's predicted active set: Hamming
/// distance on bits, then ℓ1 between probability vectors, then pool index.
pub fn candidate_pool(anchor_bits: &ActiveSet, anchor_probs: &[f64], pool: &[PoolPrediction], k_a: usize) -> Vec<usize> {
    let mut keyed: Vec<(usize, f64, usize)> = pool
        .iter()
        .map(|p| (anchor_bits.hamming(&p.bits), l1(anchor_probs, &p.probs), p.index))
        .collect();
    let by_key = |a: &(usize, f64, usize), b: &(usize, f64, usize)| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2));
    if k_a < keyed.len() {
        keyed.select_nth_unstable_by(k_a, by_key);
        keyed.truncate(k_a);
    }
    keyed.sort_by(by_key);
    keyed.into_iter().map(|k| k.2).collect()
}

/// Argmin of the ℓ1 distance between `anchor` and each candidate's features,
/// skipping `excluded`; ties go to the lower pool index. `None` when every
/// candidate is excluded.
pub fn select_delta(anchor: &[f64], candidates: &[(usize, &[f64])], excluded: &BTreeSet<usize>) -> Option<usize> {
    candidates
        .iter()
        .filter(|(i, _)| !excluded.contains(i))
        .map(|(i, f)| (l1(anchor, f), *i))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, i)| i)
}
