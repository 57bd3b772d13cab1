//! Experiment orchestration: datasets per seed, one active-learning run per
//! (seed, variant) cell, test-set metrics after every round, CSV output.

mod metrics;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::al::{self, AlConfig, AlError, AlState, ModelSpec, RoundAudit, Variant};
use crate::datagen::{
    generate_labeled_counts, generate_pool_counts, split_counts, DataError, DemandSpec, DemandStreams, InstancePool,
    LabeledInstance,
};
use crate::nn::{self, LossKind, MlpModel, NnError, TrainConfig};
use crate::opf::{cases, write_atomic, DcOracle, NetworkCase, OpfError};
use crate::rng::SeedStreams;

pub use metrics::{compute_metrics, l1_errors, percentile, ErrorSummary};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Opf(#[from] OpfError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Al(#[from] AlError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("io error on {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSizes {
    /// |D_0|
    pub initial: usize,
    /// |D_v|
    pub validation: usize,
    /// |D_p|
    pub pool: usize,
    pub test: usize,
}

impl Default for DataSizes {
    fn default() -> Self {
        Self {
            initial: 200,
            validation: 200,
            pool: 1500,
            test: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Bundled case name (`two_bus`, `ten_bus`, ...) or a path to a case file.
    pub case: String,
    pub sizes: DataSizes,
    pub demand: DemandSpec,
    /// Round settings; `variant` and `seed` are overridden per cell.
    pub al: AlConfig,
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    pub model: ModelSpec,
    /// Optimizer settings for the round-0 models trained on `D_0`. Per-call
    /// shuffling seeds are derived from the experiment seed, so `seed` is not used.
    pub train: TrainConfig,
    /// Optimizer settings for the per-round retraining.
    pub retrain: TrainConfig,
    /// Continue each round's training from the previous round's weights.
    pub warm_start: bool,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            case: "ten_bus".into(),
            sizes: DataSizes::default(),
            demand: DemandSpec::default(),
            al: AlConfig::default(),
            variants: Variant::ALL.to_vec(),
            seeds: (0..10).collect(),
            model: ModelSpec::default(),
            train: TrainConfig::default(),
            retrain: TrainConfig {
                epochs: 500,
                patience: 50,
                ..TrainConfig::default()
            },
            warm_start: true,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let s = &self.sizes;
        if s.initial == 0 || s.validation == 0 || s.pool == 0 || s.test == 0 {
            return Err(HarnessError::Config("dataset sizes must be positive".into()));
        }
        if s.pool < self.al.rounds * self.al.budget {
            return Err(HarnessError::Config(format!(
                "pool size {} is below rounds × budget = {}",
                s.pool,
                self.al.rounds * self.al.budget
            )));
        }
        if self.variants.is_empty() || self.seeds.is_empty() {
            return Err(HarnessError::Config("need at least one variant and one seed".into()));
        }
        self.al.validate()?;
        self.train.validate()?;
        self.retrain.validate()?;
        self.demand.validate()?;
        Ok(())
    }

    pub fn load_case(&self) -> Result<NetworkCase, HarnessError> {
        load_case(&self.case)
    }
}

/// A bundled case by name, otherwise a case file path.
pub fn load_case(name_or_path: &str) -> Result<NetworkCase, HarnessError> {
    match cases::by_name(name_or_path) {
        Some(c) => Ok(c),
        None => Ok(NetworkCase::from_path(name_or_path)?),
    }
}

/// One metrics row. `seed` is the seed number, or `avg` for aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub variant: String,
    pub seed: String,
    pub round: usize,
    pub mean_l1: f64,
    pub p70: f64,
    pub p80: f64,
    pub p90: f64,
    pub queried_total: usize,
}

pub const METRICS_HEADER: [&str; 8] = ["variant", "seed", "round", "mean_l1", "p70", "p80", "p90", "queried_total"];

/// The four datasets of one seed.
#[derive(Debug, Clone)]
pub struct Datasets {
    pub d0: Vec<LabeledInstance>,
    pub validation: Vec<LabeledInstance>,
    pub pool: InstancePool,
    pub test: Vec<LabeledInstance>,
}

/// Generate `D_0`, `D_v`, the test set and `D_p` from independent named streams
/// of `seed`, splitting each size evenly over the regimes.
pub fn generate_datasets(cfg: &ExperimentConfig, case: &NetworkCase, seed: u64) -> Result<Datasets, HarnessError> {
    let seeds = SeedStreams::new(seed);
    let oracle = DcOracle::default();
    let regimes = cfg.demand.regimes.regimes.len();
    let labeled = |name: &str, n: usize| {
        generate_labeled_counts(
            case,
            &cfg.demand,
            &split_counts(n, regimes),
            &mut DemandStreams::new(&seeds, name),
            &oracle,
        )
    };
    Ok(Datasets {
        d0: labeled("d0", cfg.sizes.initial)?,
        validation: labeled("validation", cfg.sizes.validation)?,
        test: labeled("test", cfg.sizes.test)?,
        pool: generate_pool_counts(
            case,
            &cfg.demand,
            &split_counts(cfg.sizes.pool, regimes),
            &mut DemandStreams::new(&seeds, "pool"),
        )?,
    })
}

/// Datasets and round-0 models for one seed. Every variant of the seed starts
/// from a clone of this, so all of them see identical data.
#[derive(Debug, Clone)]
pub struct SeedContext {
    pub seed: u64,
    pub case: NetworkCase,
    pub d0: Vec<LabeledInstance>,
    pub validation: Vec<LabeledInstance>,
    pub pool: InstancePool,
    pub test: Vec<LabeledInstance>,
    /// Proxy and predictor trained on `D_0`.
    pub proxy: MlpModel,
    pub predictor: MlpModel,
    pub hashes: BTreeMap<String, String>,
}

fn derived_seed(seeds: &SeedStreams, name: &str) -> u64 {
    seeds.child("train-seeds").stream(name).next_u64()
}

fn training_config(base: &TrainConfig, seeds: &SeedStreams, name: &str) -> TrainConfig {
    TrainConfig {
        seed: derived_seed(seeds, name),
        ..base.clone()
    }
}

/// SHA-256 over the exact bit patterns of a dataset's demands (and labels).
pub fn dataset_hash<'a>(rows: impl IntoIterator<Item = (usize, &'a [f64], Option<Vec<f64>>)>) -> String {
    let mut h = Sha256::new();
    for (i, x, y) in rows {
        h.update((i as u64).to_le_bytes());
        for v in x {
            h.update(v.to_bits().to_le_bytes());
        }
        for v in y.unwrap_or_default() {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn labeled_hash(data: &[LabeledInstance]) -> String {
    dataset_hash(data.iter().map(|d| (d.index, d.x.values(), Some(d.y.target()))))
}

impl SeedContext {
    /// Generate the datasets, then train both round-0 models on `D_0`.
    pub fn build(cfg: &ExperimentConfig, case: &NetworkCase, seed: u64) -> Result<Self, HarnessError> {
        let seeds = SeedStreams::new(seed);
        let Datasets {
            d0,
            validation,
            pool,
            test,
        } = generate_datasets(cfg, case, seed)?;

        let (mut proxy, mut predictor) = al::init_models(case, &d0, &cfg.model, &seeds);
        let x = al::inputs(&d0);
        nn::train(&mut proxy, &x, &al::targets(&d0), LossKind::L2, &training_config(&cfg.train, &seeds, "initial/proxy"))?;
        if cfg.variants.iter().any(|v| v.uses_predictor()) {
            nn::train(
                &mut predictor,
                &x,
                &al::active_bits(&d0),
                LossKind::Bce,
                &training_config(&cfg.train, &seeds, "initial/predictor"),
            )?;
        }

        let mut hashes = BTreeMap::new();
        hashes.insert("d0".into(), labeled_hash(&d0));
        hashes.insert("validation".into(), labeled_hash(&validation));
        hashes.insert("test".into(), labeled_hash(&test));
        hashes.insert(
            "pool".into(),
            dataset_hash(pool.unlabeled().map(|u| (u.index, u.x.values(), None))),
        );
        Ok(Self {
            seed,
            case: case.clone(),
            d0,
            validation,
            pool,
            test,
            proxy,
            predictor,
            hashes,
        })
    }
}

/// Everything recorded for one (seed, variant) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAudit {
    pub variant: Variant,
    pub seed: u64,
    pub psi: f64,
    pub dataset_hashes: BTreeMap<String, String>,
    pub initial: ErrorSummary,
    pub rounds: Vec<RoundAudit>,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub metrics: Vec<RoundMetrics>,
    pub audit: CellAudit,
    /// Proxy after the final round.
    pub proxy: MlpModel,
    pub train: Vec<LabeledInstance>,
}

/// Run `cfg.al.rounds` rounds of `variant` from the seed's shared starting point.
pub fn run_cell(cfg: &ExperimentConfig, ctx: &SeedContext, variant: Variant) -> Result<CellResult, HarnessError> {
    let al_cfg = AlConfig {
        variant,
        seed: ctx.seed,
        ..cfg.al.clone()
    };
    let seeds = SeedStreams::new(ctx.seed);
    let cell = seeds.child(&format!("{}/psi{}", variant.name(), cfg.al.psi));
    let mut state = AlState::new(
        ctx.case.clone(),
        ctx.d0.clone(),
        ctx.validation.clone(),
        ctx.pool.clone(),
        al_cfg.buckets,
        // Buckets depend on the seed only, so every variant shares them.
        &mut seeds.stream("buckets"),
        ctx.proxy.clone(),
        variant.uses_predictor().then(|| ctx.predictor.clone()),
    )?;
    let mut select_rng = cell.stream("select");
    let mut oracle = DcOracle::default();
    let initial = compute_metrics(&state.proxy, &ctx.test)?;
    let mut metrics = Vec::new();
    let mut rounds = Vec::new();
    for r in 1..=al_cfg.rounds {
        let audit = al::al_round(&mut state, &al_cfg, r, &mut oracle, &mut select_rng)?;
        if !cfg.warm_start {
            let (p, a) = al::init_models(&ctx.case, &ctx.d0, &cfg.model, &cell.child(&format!("round{r}")));
            state.proxy = p;
            if state.predictor.is_some() {
                state.predictor = Some(a);
            }
        }
        let proxy_cfg = training_config(&cfg.retrain, &cell, &format!("round{r}/proxy"));
        let predictor_cfg = training_config(&cfg.retrain, &cell, &format!("round{r}/predictor"));
        state.train_models(&proxy_cfg, &predictor_cfg)?;
        let m = compute_metrics(&state.proxy, &ctx.test)?;
        metrics.push(RoundMetrics {
            variant: variant.name().into(),
            seed: ctx.seed.to_string(),
            round: r,
            mean_l1: m.mean_l1,
            p70: m.p70,
            p80: m.p80,
            p90: m.p90,
            queried_total: state.train.len() - ctx.d0.len(),
        });
        log::info!(
            "{} seed {} round {r}: mean {:.4} p90 {:.4}",
            variant,
            ctx.seed,
            m.mean_l1,
            m.p90
        );
        rounds.push(audit);
    }
    Ok(CellResult {
        metrics,
        audit: CellAudit {
            variant,
            seed: ctx.seed,
            psi: cfg.al.psi,
            dataset_hashes: ctx.hashes.clone(),
            initial,
            rounds,
        },
        proxy: state.proxy,
        train: state.train,
    })
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentResult {
    /// Per-seed rows, ordered by seed, then variant, then round.
    pub rows: Vec<RoundMetrics>,
    /// Seed means per (variant, round), `seed = "avg"`.
    pub aggregate: Vec<RoundMetrics>,
    pub audits: Vec<CellAudit>,
    /// Cells that failed, with the cause. The remaining cells still ran.
    pub failures: Vec<(Variant, u64, String)>,
}

impl ExperimentResult {
    /// Seed-averaged row for the last round of `variant`.
    pub fn final_aggregate(&self, variant: Variant) -> Option<&RoundMetrics> {
        self.aggregate
            .iter()
            .filter(|r| r.variant == variant.name())
            .max_by_key(|r| r.round)
    }
}

/// Mean of each metric across seeds, per (variant, round), in first-seen order.
pub fn aggregate(rows: &[RoundMetrics]) -> Vec<RoundMetrics> {
    let mut groups: Vec<((String, usize), Vec<&RoundMetrics>)> = Vec::new();
    for r in rows {
        let key = (r.variant.clone(), r.round);
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => g.1.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|((variant, round), g)| {
            let n = g.len() as f64;
            let mean = |f: fn(&RoundMetrics) -> f64| g.iter().map(|r| f(r)).sum::<f64>() / n;
            RoundMetrics {
                variant,
                seed: "avg".into(),
                round,
                mean_l1: mean(|r| r.mean_l1),
                p70: mean(|r| r.p70),
                p80: mean(|r| r.p80),
                p90: mean(|r| r.p90),
                queried_total: (g.iter().map(|r| r.queried_total).sum::<usize>() as f64 / n).round() as usize,
            }
        })
        .collect()
}

pub fn metrics_csv(rows: &[RoundMetrics]) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(METRICS_HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| HarnessError::Csv(e.into_error().into()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    write_atomic(path, bytes).map_err(|e| io_err(path, e))
}

fn cell_stem(variant: Variant, seed: u64) -> String {
    format!("{}_seed{seed}", variant.name())
}

/// Run every (seed, variant) cell. A failing cell is logged and recorded in
/// `failures`; the others continue. With `out_dir` set, each cell's CSV and audit
/// are written as they finish and merged into `metrics.csv` and `aggregate.csv`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    cfg.validate()?;
    let case = cfg.load_case()?;
    let mut result = ExperimentResult::default();
    for &seed in &cfg.seeds {
        let ctx = match SeedContext::build(cfg, &case, seed) {
            Ok(c) => c,
            Err(e) => {
                log::error!("seed {seed}: data preparation failed: {e}");
                for &v in &cfg.variants {
                    result.failures.push((v, seed, e.to_string()));
                }
                continue;
            }
        };
        for &variant in &cfg.variants {
            match run_cell(cfg, &ctx, variant) {
                Ok(cell) => {
                    if let Some(dir) = &cfg.out_dir {
                        let stem = cell_stem(variant, seed);
                        write_file(&dir.join("cells").join(format!("{stem}.csv")), &metrics_csv(&cell.metrics)?)?;
                        let audit = serde_json::to_vec_pretty(&cell.audit).expect("audit serializes");
                        write_file(&dir.join("audit").join(format!("{stem}.json")), &audit)?;
                    }
                    result.rows.extend(cell.metrics);
                    result.audits.push(cell.audit);
                }
                Err(e) => {
                    log::error!("{variant} seed {seed} failed: {e}");
                    result.failures.push((variant, seed, e.to_string()));
                }
            }
        }
    }
    result.aggregate = aggregate(&result.rows);
    if let Some(dir) = &cfg.out_dir {
        write_file(&dir.join("metrics.csv"), &metrics_csv(&result.rows)?)?;
        write_file(&dir.join("aggregate.csv"), &metrics_csv(&result.aggregate)?)?;
    }
    Ok(result)
}

/// Seed-averaged final-round metrics for one (variant, ψ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiRow {
    pub variant: String,
    pub psi: f64,
    pub mean_l1: f64,
    pub p90: f64,
}

/// Final-round mean and P90 of AS_raw and AS_pen at each ψ, averaged over seeds.
/// Datasets and round-0 models are built once per seed and shared across ψ.
pub fn psi_sweep(cfg: &ExperimentConfig, psis: &[f64]) -> Result<Vec<PsiRow>, HarnessError> {
    if psis.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(HarnessError::Config("psi values must lie in [0, 1]".into()));
    }
    let variants = [Variant::AsRaw, Variant::AsPen];
    let base = ExperimentConfig {
        variants: variants.to_vec(),
        ..cfg.clone()
    };
    base.validate()?;
    let case = base.load_case()?;
    let mut finals: BTreeMap<(usize, Variant), Vec<RoundMetrics>> = BTreeMap::new();
    for &seed in &base.seeds {
        let ctx = SeedContext::build(&base, &case, seed)?;
        for (pi, &psi) in psis.iter().enumerate() {
            let at_psi = ExperimentConfig {
                al: AlConfig { psi, ..base.al.clone() },
                ..base.clone()
            };
            for variant in variants {
                let cell = run_cell(&at_psi, &ctx, variant)?;
                finals
                    .entry((pi, variant))
                    .or_default()
                    .push(cell.metrics.last().expect("at least one round").clone());
            }
        }
    }
    let mut out = Vec::new();
    for variant in variants {
        for (pi, &psi) in psis.iter().enumerate() {
            let rows = &finals[&(pi, variant)];
            let n = rows.len() as f64;
            out.push(PsiRow {
                variant: variant.name().into(),
                psi,
                mean_l1: rows.iter().map(|r| r.mean_l1).sum::<f64>() / n,
                p90: rows.iter().map(|r| r.p90).sum::<f64>() / n,
            });
        }
    }
    if let Some(dir) = &cfg.out_dir {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &out {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Csv(e.into_error().into()))?;
        write_file(&dir.join("psi_sweep.csv"), &bytes)?;
    }
    Ok(out)
}
