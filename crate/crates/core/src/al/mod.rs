//! Active sampling with active-set filters, plus the bucketized input-gradient
//! (BAS-IG) and uniform random baselines.
//!
//! One round: score buckets by the proxy's mean input-gradient norm on their
//! validation points, split the budget across buckets, pick anchor validation
//! points per bucket (worst-loss and random), find pool points whose predicted
//! active set is close to each anchor's, and query the nearest of those.

mod buckets;
mod select;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datagen::{DataError, InstancePool, LabeledInstance};
use crate::nn::{self, loss_l2, Activation, Head, LossKind, MlpModel, NnError, Standardizer, TrainConfig, TrainReport};
use crate::opf::{LabelOracle, NetworkCase};
use crate::rng::{SeedStreams, StreamRng};

pub use buckets::{kmeanspp_buckets, kmeanspp_seed, lloyd, BucketSet, MAX_LLOYD_ITERS};
pub use select::{
    acquisition_ig, candidate_pool, distribute, filter_select, greedy_count, select_delta, FilterSelection,
    PoolPrediction,
};

#[derive(Debug, Error)]
pub enum AlError {
    #[error("{points} point(s) cannot form {k} bucket(s)")]
    TooFewPoints { points: usize, k: usize },
    #[error("fewer than {k} distinct points for k-means++ seeding")]
    TooFewDistinct { k: usize },
    #[error("unlabeled pool holds {available} point(s), round needs {needed}")]
    PoolTooSmall { needed: usize, available: usize },
    #[error("invalid active-learning config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "AS_raw")]
    AsRaw,
    #[serde(rename = "AS_pen")]
    AsPen,
    #[serde(rename = "BAS-IG")]
    BasIg,
    #[serde(rename = "Random")]
    Random,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::AsRaw, Variant::AsPen, Variant::BasIg, Variant::Random];

    pub fn name(self) -> &'static str {
        match self {
            Variant::AsRaw => "AS_raw",
            Variant::AsPen => "AS_pen",
            Variant::BasIg => "BAS-IG",
            Variant::Random => "Random",
        }
    }

    /// Whether the variant filters candidates through the active-set predictor.
    pub fn uses_predictor(self) -> bool {
        matches!(self, Variant::AsRaw | Variant::AsPen)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = AlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace(['-', '_'], "");
        match norm.as_str() {
            "asraw" | "raw" => Ok(Variant::AsRaw),
            "aspen" | "pen" => Ok(Variant::AsPen),
            "basig" => Ok(Variant::BasIg),
            "random" => Ok(Variant::Random),
            _ => Err(AlError::InvalidConfig(format!(
                "unknown variant `{s}` (expected AS_raw, AS_pen, BAS-IG or Random)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlConfig {
    pub rounds: usize,
    /// Labels queried per round (β).
    pub budget: usize,
    /// Bucket count (k).
    pub buckets: usize,
    /// Share of each bucket's anchors taken greedily by validation loss (ψ).
    pub psi: f64,
    /// Neighbors in the predicted-active-set search (k_a).
    pub k_a: usize,
    pub variant: Variant,
    /// Probability at or above which a constraint is predicted active.
    pub threshold: f64,
    pub seed: u64,
}

impl Default for AlConfig {
    fn default() -> Self {
        Self {
            rounds: 8,
            budget: 30,
            buckets: 6,
            psi: 0.4,
            k_a: 10,
            variant: Variant::AsRaw,
            threshold: 0.5,
            seed: 0,
        }
    }
}

impl AlConfig {
    pub fn validate(&self) -> Result<(), AlError> {
        let bad = |m: &str| Err(AlError::InvalidConfig(m.to_string()));
        if self.rounds == 0 || self.budget == 0 || self.buckets == 0 || self.k_a == 0 {
            return bad("rounds, budget, buckets and k_a must all be at least 1");
        }
        if !(0.0..=1.0).contains(&self.psi) {
            return bad("psi must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad("threshold must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Network shape shared by the proxy and the active-set predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub hidden_layers: usize,
    /// Hidden width; `None` means `max(64, 4·input)`.
    pub width: Option<usize>,
    pub activation: Activation,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            hidden_layers: 3,
            width: None,
            activation: Activation::Softplus,
        }
    }
}

impl ModelSpec {
    pub fn dims(&self, input: usize, output: usize) -> Vec<usize> {
        let mut d = MlpModel::default_dims(input, output, self.hidden_layers);
        if let Some(w) = self.width {
            for v in &mut d[1..=self.hidden_layers] {
                *v = w;
            }
        }
        d
    }
}

pub fn inputs(data: &[LabeledInstance]) -> Vec<Vec<f64>> {
    data.iter().map(|d| d.x.values().to_vec()).collect()
}

pub fn targets(data: &[LabeledInstance]) -> Vec<Vec<f64>> {
    data.iter().map(|d| d.y.target()).collect()
}

pub fn active_bits(data: &[LabeledInstance]) -> Vec<Vec<f64>> {
    data.iter().map(|d| d.a.as_f64()).collect()
}

/// Freshly initialized proxy and active-set predictor with input (and proxy
/// output) standardization frozen from `d0`. Weights come from the `init/proxy`
/// and `init/predictor` streams of `seeds`.
pub fn init_models(case: &NetworkCase, d0: &[LabeledInstance], spec: &ModelSpec, seeds: &SeedStreams) -> (MlpModel, MlpModel) {
    let init = seeds.child("init");
    let m = case.num_loads();
    let x_scale = Standardizer::fit(&inputs(d0));
    let mut proxy = MlpModel::new(
        &spec.dims(m, case.solution_dim()),
        spec.activation,
        Head::Identity,
        &mut init.stream("proxy"),
    );
    proxy.set_input_standardizer(x_scale.clone());
    proxy.set_output_standardizer(Standardizer::fit(&targets(d0)));
    let mut predictor = MlpModel::new(
        &spec.dims(m, case.num_constraints()),
        spec.activation,
        Head::Logistic,
        &mut init.stream("predictor"),
    );
    predictor.set_input_standardizer(x_scale);
    (proxy, predictor)
}

/// Everything one active-learning run carries between rounds.
#[derive(Debug, Clone)]
pub struct AlState {
    pub case: NetworkCase,
    /// Current training set `D`.
    pub train: Vec<LabeledInstance>,
    /// Bucket validation set `D_v`.
    pub validation: Vec<LabeledInstance>,
    /// Unlabeled pool `D_p` (and its labeled/skipped history).
    pub pool: InstancePool,
    pub buckets: BucketSet,
    /// Standardization of bucket features, fitted on `D_v ∪ D_p`.
    pub bucket_scaler: Standardizer,
    pub proxy: MlpModel,
    /// Only the active-set variants need one.
    pub predictor: Option<MlpModel>,
    val_bucket: Vec<usize>,
    pool_bucket: BTreeMap<usize, usize>,
}

impl AlState {
    /// Bucketize `D_v ∪ D_p` with k-means++ on standardized demand and freeze
    /// the buckets for the rest of the run.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        case: NetworkCase,
        d0: Vec<LabeledInstance>,
        validation: Vec<LabeledInstance>,
        pool: InstancePool,
        k: usize,
        rng: &mut StreamRng,
        proxy: MlpModel,
        predictor: Option<MlpModel>,
    ) -> Result<Self, AlError> {
        let mut raw: Vec<Vec<f64>> = inputs(&validation);
        raw.extend(pool.unlabeled().map(|u| u.x.values().to_vec()));
        let scaler = Standardizer::fit(&raw);
        let feats: Vec<Vec<f64>> = raw.iter().map(|r| scaler.apply(r)).collect();
        let buckets = kmeanspp_buckets(&feats, k, rng)?;
        let val_bucket = feats[..validation.len()].iter().map(|f| buckets.assign(f)).collect();
        let pool_bucket = pool
            .unlabeled()
            .zip(&feats[validation.len()..])
            .map(|(u, f)| (u.index, buckets.assign(f)))
            .collect();
        Ok(Self {
            case,
            train: d0,
            validation,
            pool,
            buckets,
            bucket_scaler: scaler,
            proxy,
            predictor,
            val_bucket,
            pool_bucket,
        })
    }

    pub fn validation_bucket(&self, i: usize) -> usize {
        self.val_bucket[i]
    }

    /// Bucket of a pool index (labeled or not).
    pub fn pool_bucket(&self, index: usize) -> Option<usize> {
        self.pool_bucket.get(&index).copied()
    }

    /// Retrain the proxy (and predictor, if any) on the current `D`, starting
    /// from their present weights.
    pub fn train_models(&mut self, proxy_cfg: &TrainConfig, predictor_cfg: &TrainConfig) -> Result<TrainingTrace, AlError> {
        let x = inputs(&self.train);
        let proxy = nn::train(&mut self.proxy, &x, &targets(&self.train), LossKind::L2, proxy_cfg)?;
        let predictor = match self.predictor.as_mut() {
            Some(p) => Some(nn::train(p, &x, &active_bits(&self.train), LossKind::Bce, predictor_cfg)?),
            None => None,
        };
        Ok(TrainingTrace { proxy, predictor })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub proxy: TrainReport,
    pub predictor: Option<TrainReport>,
}

/// One JSON audit record per round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundAudit {
    pub round: usize,
    pub variant: Variant,
    /// Bucket scores `s_b` (empty for the random baseline).
    pub scores: Vec<f64>,
    /// Distributor output `n_b`.
    pub allocation: Vec<usize>,
    /// Labels obtained per bucket after reallocation.
    pub realized: Vec<usize>,
    /// Newly labeled pool indices, in query order.
    pub queried: Vec<usize>,
    /// Pool indices the oracle could not label.
    pub skipped: Vec<usize>,
    /// Budget moved away from the bucket it was allocated to.
    pub reallocated: usize,
    /// Set when the pool ran dry before `β` labels were obtained.
    pub partial: bool,
    pub wall_time_s: f64,
}

/// Per-round view of the pool used by the selectors.
struct Selector<'a> {
    state: &'a AlState,
    variant: Variant,
    k_a: usize,
    /// Unlabeled pool indices per bucket, ascending.
    pool_by_bucket: Vec<Vec<usize>>,
    /// Validation `(id, loss)` per bucket.
    val_by_bucket: Vec<Vec<(usize, f64)>>,
    predictions: BTreeMap<usize, PoolPrediction>,
    pool_features: BTreeMap<usize, Vec<f64>>,
    chosen: BTreeSet<usize>,
    order: Vec<usize>,
    realized: Vec<usize>,
}

impl<'a> Selector<'a> {
    fn new(state: &'a AlState, cfg: &AlConfig, val_losses: &[f64]) -> Result<Self, AlError> {
        let k = state.buckets.k();
        let mut pool_by_bucket = vec![Vec::new(); k];
        for u in state.pool.unlabeled() {
            pool_by_bucket[state.pool_bucket[&u.index]].push(u.index);
        }
        let mut val_by_bucket = vec![Vec::new(); k];
        for (i, &loss) in val_losses.iter().enumerate() {
            val_by_bucket[state.val_bucket[i]].push((i, loss));
        }
        let mut predictions = BTreeMap::new();
        let mut pool_features = BTreeMap::new();
        if cfg.variant.uses_predictor() {
            let predictor = state
                .predictor
                .as_ref()
                .ok_or_else(|| AlError::InvalidConfig("active-set variants need a predictor".into()))?;
            for u in state.pool.unlabeled() {
                let (bits, probs) = nn::predict_active_set(predictor, u.x.values(), cfg.threshold)?;
                predictions.insert(u.index, PoolPrediction { index: u.index, bits, probs });
                pool_features.insert(u.index, features(cfg.variant, &state.proxy, u.x.values())?);
            }
        }
        Ok(Self {
            state,
            variant: cfg.variant,
            k_a: cfg.k_a,
            pool_by_bucket,
            val_by_bucket,
            predictions,
            pool_features,
            chosen: BTreeSet::new(),
            order: Vec::new(),
            realized: vec![0; k],
        })
    }

    fn take(&mut self, b: usize, index: usize) {
        self.chosen.insert(index);
        self.order.push(index);
        self.realized[b] += 1;
    }

    /// Query for one validation anchor: kNN on predicted bits, then the ℓ1-nearest
    /// unchosen candidate; `k_a` is doubled once if every candidate is taken.
    fn pick_for_anchor(&mut self, b: usize, anchor: usize, threshold: f64) -> Result<bool, AlError> {
        let bucket_pool: Vec<PoolPrediction> = self.pool_by_bucket[b]
            .iter()
            .map(|i| self.predictions[i].clone())
            .collect();
        if bucket_pool.is_empty() {
            return Ok(false);
        }
        let x = self.state.validation[anchor].x.values();
        let predictor = self.state.predictor.as_ref().expect("checked in Selector::new");
        let (bits, probs) = nn::predict_active_set(predictor, x, threshold)?;
        let anchor_feat = features(self.variant, &self.state.proxy, x)?;
        for k_a in [self.k_a, 2 * self.k_a] {
            let cands = candidate_pool(&bits, &probs, &bucket_pool, k_a);
            let feats: Vec<(usize, &[f64])> = cands.iter().map(|i| (*i, self.pool_features[i].as_slice())).collect();
            if let Some(pick) = select_delta(&anchor_feat, &feats, &self.chosen) {
                self.take(b, pick);
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn pick_uniform(&mut self, b: usize, rng: &mut StreamRng) -> bool {
        let free: Vec<usize> = self.pool_by_bucket[b]
            .iter()
            .copied()
            .filter(|i| !self.chosen.contains(i))
            .collect();
        if free.is_empty() {
            return false;
        }
        let pick = free[sample(rng, free.len(), 1).index(0)];
        self.take(b, pick);
        true
    }

    /// One extra label for bucket `b` during reallocation.
    fn extra(&mut self, b: usize, used: &BTreeSet<usize>, threshold: f64, rng: &mut StreamRng) -> Result<bool, AlError> {
        if self.variant.uses_predictor() {
            let mut anchors = self.val_by_bucket[b].clone();
            anchors.sort_by(|a, c| c.1.total_cmp(&a.1).then(a.0.cmp(&c.0)));
            let (fresh, seen): (Vec<_>, Vec<_>) = anchors.into_iter().partition(|a| !used.contains(&a.0));
            for (anchor, _) in fresh.into_iter().chain(seen) {
                if self.pick_for_anchor(b, anchor, threshold)? {
                    return Ok(true);
                }
            }
        }
        Ok(self.pick_uniform(b, rng))
    }

    /// Hand out `deficit` labels round-robin over buckets by descending score.
    fn reallocate(
        &mut self,
        mut deficit: usize,
        scores: &[f64],
        used: &mut [BTreeSet<usize>],
        threshold: f64,
        rng: &mut StreamRng,
    ) -> Result<usize, AlError> {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let mut alive = vec![true; scores.len()];
        while deficit > 0 && alive.iter().any(|&a| a) {
            for &b in &order {
                if deficit == 0 {
                    break;
                }
                if alive[b] {
                    if self.extra(b, &used[b], threshold, rng)? {
                        deficit -= 1;
                    } else {
                        alive[b] = false;
                    }
                }
            }
        }
        Ok(deficit)
    }
}

/// Selection features: raw demand for AS_raw, proxy penultimate activations for AS_pen.
pub fn features(variant: Variant, proxy: &MlpModel, x: &[f64]) -> Result<Vec<f64>, NnError> {
    match variant {
        Variant::AsPen => proxy.penultimate(x),
        _ => Ok(x.to_vec()),
    }
}

/// Per-point validation loss (ℓ2) and input-gradient norm of the proxy.
fn validation_stats(state: &AlState) -> Result<(Vec<f64>, Vec<f64>), AlError> {
    let mut losses = Vec::with_capacity(state.validation.len());
    let mut grads = Vec::with_capacity(state.validation.len());
    for v in &state.validation {
        let y = v.y.target();
        let pred = state.proxy.forward(v.x.values())?;
        losses.push(loss_l2(&pred, &y));
        let g = state.proxy.input_gradient(v.x.values(), &y)?;
        grads.push(g.iter().map(|t| t * t).sum::<f64>().sqrt());
    }
    Ok((losses, grads))
}

/// Bucket scores: mean input-gradient norm over each bucket's validation points.
pub fn bucket_scores(state: &AlState) -> Result<Vec<f64>, AlError> {
    let (_, grads) = validation_stats(state)?;
    Ok(scores_from(state, &grads))
}

fn scores_from(state: &AlState, grads: &[f64]) -> Vec<f64> {
    let k = state.buckets.k();
    let mut sum = vec![0.0; k];
    let mut n = vec![0usize; k];
    for (i, g) in grads.iter().enumerate() {
        sum[state.val_bucket[i]] += g;
        n[state.val_bucket[i]] += 1;
    }
    sum.iter().zip(&n).map(|(s, &c)| if c == 0 { 0.0 } else { s / c as f64 }).collect()
}

/// Choose and label one round's batch, moving it from the pool into `D`.
/// Models are not retrained here.
pub fn al_round(
    state: &mut AlState,
    cfg: &AlConfig,
    round: usize,
    oracle: &mut dyn LabelOracle,
    rng: &mut StreamRng,
) -> Result<RoundAudit, AlError> {
    cfg.validate()?;
    let started = Instant::now();
    if state.pool.unlabeled_len() < cfg.budget {
        return Err(AlError::PoolTooSmall {
            needed: cfg.budget,
            available: state.pool.unlabeled_len(),
        });
    }
    let k = state.buckets.k();
    let (scores, allocation, mut sel, mut used) = if cfg.variant == Variant::Random {
        let sel = Selector::new(state, cfg, &[])?;
        (Vec::new(), Vec::new(), sel, vec![BTreeSet::new(); k])
    } else {
        let (losses, grads) = validation_stats(state)?;
        let scores = scores_from(state, &grads);
        let allocation = distribute(&scores, cfg.budget);
        let sel = Selector::new(state, cfg, &losses)?;
        (scores, allocation, sel, vec![BTreeSet::new(); k])
    };

    let mut reallocated = 0;
    let mut deficit = 0;
    match cfg.variant {
        Variant::Random => {
            let free: Vec<usize> = state.pool.unlabeled().map(|u| u.index).collect();
            for i in sample(rng, free.len(), cfg.budget) {
                let idx = free[i];
                sel.take(state.pool_bucket[&idx], idx);
            }
        }
        Variant::BasIg => {
            for (b, &n_b) in allocation.iter().enumerate() {
                let avail = sel.pool_by_bucket[b].len().min(n_b);
                for i in sample(rng, sel.pool_by_bucket[b].len(), avail) {
                    let idx = sel.pool_by_bucket[b][i];
                    sel.take(b, idx);
                }
                deficit += n_b - avail;
            }
        }
        Variant::AsRaw | Variant::AsPen => {
            for (b, &n_b) in allocation.iter().enumerate() {
                let filter = filter_select(&sel.val_by_bucket[b], n_b, cfg.psi, rng);
                deficit += filter.shortfall;
                for anchor in filter.anchors().collect::<Vec<_>>() {
                    used[b].insert(anchor);
                    if !sel.pick_for_anchor(b, anchor, cfg.threshold)? {
                        deficit += 1;
                    }
                }
            }
        }
    }
    if deficit > 0 {
        reallocated += deficit;
        deficit = sel.reallocate(deficit, &scores_or_flat(&scores, k), &mut used, cfg.threshold, rng)?;
    }

    // Label, replacing any instance the oracle rejects.
    let mut queried = Vec::new();
    let mut skipped = Vec::new();
    let mut pending: Vec<usize> = std::mem::take(&mut sel.order);
    let mut chosen = sel.chosen.clone();
    let mut realized = sel.realized.clone();
    let state_scores = scores_or_flat(&scores, k);
    drop(sel);
    loop {
        let outcome = state.pool.label_on_demand(&state.case, &pending, oracle)?;
        for inst in &outcome.labeled {
            queried.push(inst.index);
        }
        state.train.extend(outcome.labeled);
        let missing = outcome.skipped.len();
        for (i, _) in outcome.skipped {
            realized[state.pool_bucket[&i]] -= 1;
            skipped.push(i);
        }
        if missing == 0 || deficit > 0 {
            break;
        }
        // Draw replacements for rejected instances with the same rules.
        let mut sel = Selector::new(state, cfg, &validation_losses_or_empty(state, cfg)?)?;
        sel.chosen = chosen.clone();
        sel.realized = realized.clone();
        reallocated += missing;
        deficit = if cfg.variant == Variant::Random {
            let free: Vec<usize> = state.pool.unlabeled().map(|u| u.index).collect();
            let n = missing.min(free.len());
            for i in sample(rng, free.len(), n) {
                let idx = free[i];
                sel.take(state.pool_bucket[&idx], idx);
            }
            missing - n
        } else {
            sel.reallocate(missing, &state_scores, &mut used, cfg.threshold, rng)?
        };
        pending = std::mem::take(&mut sel.order);
        chosen = sel.chosen.clone();
        realized = sel.realized.clone();
        if pending.is_empty() {
            break;
        }
    }

    Ok(RoundAudit {
        round,
        variant: cfg.variant,
        scores,
        allocation,
        realized,
        partial: queried.len() < cfg.budget,
        queried,
        skipped,
        reallocated,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

fn scores_or_flat(scores: &[f64], k: usize) -> Vec<f64> {
    if scores.is_empty() {
        vec![0.0; k]
    } else {
        scores.to_vec()
    }
}

fn validation_losses_or_empty(state: &AlState, cfg: &AlConfig) -> Result<Vec<f64>, AlError> {
    if cfg.variant == Variant::Random {
        Ok(Vec::new())
    } else {
        Ok(validation_stats(state)?.0)
    }
}

/// The BAS-IG baseline: bucket scores and allocation as in [`al_round`], then
/// uniform draws inside each bucket.
pub fn run_baseline_basig(
    state: &mut AlState,
    cfg: &AlConfig,
    round: usize,
    oracle: &mut dyn LabelOracle,
    rng: &mut StreamRng,
) -> Result<RoundAudit, AlError> {
    let cfg = AlConfig {
        variant: Variant::BasIg,
        ..cfg.clone()
    };
    al_round(state, &cfg, round, oracle, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
            assert_eq!(serde_json::to_string(&v).unwrap(), format!("\"{}\"", v.name()));
        }
        assert!("greedy".parse::<Variant>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(AlConfig::default().validate().is_ok());
        assert!(AlConfig { psi: 1.5, ..AlConfig::default() }.validate().is_err());
        assert!(AlConfig { budget: 0, ..AlConfig::default() }.validate().is_err());
    }

    #[test]
    fn model_spec_width_override() {
        let s = ModelSpec {
            width: Some(16),
            ..ModelSpec::default()
        };
        assert_eq!(s.dims(3, 2), vec![3, 16, 16, 16, 2]);
        assert_eq!(ModelSpec::default().dims(20, 2), vec![20, 80, 80, 80, 2]);
    }
}
