//! Regime-conditioned load perturbation.
//!
//! A draw for regime `t` is `x_i = d · m_i · x0_i · ε_i` with a per-bus
//! multiplier `m_i ~ U[lo_t, hi_t)`, one regional factor `d ~ Q_r` per sample and
//! per-bus noise `ε_i ~ LogNormal(μ, σ)` clipped to a configurable band. The three
//! factors come from separate named streams.

mod io;
mod pool;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::opf::{ActiveSet, DcOracle, DemandVector, NetworkCase, OpfError, OpfSolution};
use crate::rng::{SeedStreams, StreamRng};

pub use io::{read_labeled, read_unlabeled, write_labeled, write_unlabeled};
pub use pool::{InstancePool, LabelOutcome, UnlabeledInstance};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("unknown regime `{0}`")]
    UnknownRegime(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("generation stalled: {attempts} consecutive infeasible draws in regime `{regime}`")]
    Stalled { regime: String, attempts: usize },
    #[error("instance {0} is already labeled")]
    AlreadyLabeled(usize),
    #[error("instance {0} is not in the unlabeled pool")]
    UnknownIndex(usize),
    #[error(transparent)]
    Opf(#[from] OpfError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("dataset format error: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Regime {
    pub name: String,
    /// Multiplier interval `[lo, hi)`; `lo == hi` is a point mass.
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeSpec {
    pub regimes: Vec<Regime>,
}

impl Default for RegimeSpec {
    fn default() -> Self {
        let r = |name: &str, lo, hi| Regime {
            name: name.to_string(),
            lo,
            hi,
        };
        Self {
            regimes: vec![r("low", 0.55, 0.7), r("mid", 0.7, 0.85), r("high", 0.85, 1.0)],
        }
    }
}

impl RegimeSpec {
    pub fn get(&self, name: &str) -> Result<&Regime, DataError> {
        self.regimes
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| DataError::UnknownRegime(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.regimes.iter().map(|r| r.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    /// `Q_r = U[regional.0, regional.1]`.
    pub regional: (f64, f64),
    /// `Q_i = LogNormal(mu, sigma)`.
    pub noise_mu: f64,
    pub noise_sigma: f64,
    /// Individual noise is clipped into this band.
    pub noise_clip: (f64, f64),
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self {
            regional: (0.8, 1.2),
            noise_mu: 0.0,
            noise_sigma: 0.15,
            noise_clip: (0.5, 2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DemandSpec {
    pub regimes: RegimeSpec,
    pub perturbation: PerturbationSpec,
}

impl DemandSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: String| Err(DataError::InvalidSpec(m));
        if self.regimes.regimes.is_empty() {
            return bad("no regimes".into());
        }
        for r in &self.regimes.regimes {
            if !(r.lo >= 0.0 && r.lo <= r.hi) {
                return bad(format!("regime `{}` needs 0 <= lo <= hi", r.name));
            }
        }
        let p = &self.perturbation;
        if !(p.regional.0 >= 0.0 && p.regional.0 <= p.regional.1) {
            return bad("regional interval must satisfy 0 <= lo <= hi".into());
        }
        if !(p.noise_sigma >= 0.0) {
            return bad("noise sigma must be non-negative".into());
        }
        if !(p.noise_clip.0 <= p.noise_clip.1) {
            return bad("noise clip band is empty".into());
        }
        Ok(())
    }

    /// Largest demand a draw of `regime` can produce at each load bus.
    pub fn demand_cap(&self, case: &NetworkCase, regime: &str) -> Result<DemandVector, DataError> {
        let r = self.regimes.get(regime)?;
        let p = &self.perturbation;
        let noise_max = if p.noise_sigma == 0.0 {
            p.noise_mu.exp().clamp(p.noise_clip.0, p.noise_clip.1)
        } else {
            p.noise_clip.1
        };
        Ok(DemandVector(
            case.nominal_demand()
                .values()
                .iter()
                .map(|x0| r.hi * p.regional.1 * noise_max * x0)
                .collect(),
        ))
    }
}

/// Uniform on `[lo, hi)`, degenerating to `lo` when the interval is a point.
fn uniform(rng: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        lo
    } else {
        lo + (hi - lo) * rng.random::<f64>()
    }
}

/// The three random streams feeding one dataset.
#[derive(Debug, Clone)]
pub struct DemandStreams {
    pub regime: StreamRng,
    pub regional: StreamRng,
    pub individual: StreamRng,
}

impl DemandStreams {
    /// Streams `<dataset>/regime`, `<dataset>/regional`, `<dataset>/individual`.
    pub fn new(seeds: &SeedStreams, dataset: &str) -> Self {
        let s = seeds.child(dataset);
        Self {
            regime: s.stream("regime"),
            regional: s.stream("regional"),
            individual: s.stream("individual"),
        }
    }
}

/// A demand together with the factors that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandDraw {
    pub multipliers: Vec<f64>,
    pub regional: f64,
    pub noise: Vec<f64>,
    pub demand: DemandVector,
}

/// `x = d · m ∘ x0 ∘ ε`.
pub fn compose_demand(x0: &[f64], multipliers: &[f64], regional: f64, noise: &[f64]) -> DemandVector {
    DemandVector(
        x0.iter()
            .zip(multipliers)
            .zip(noise)
            .map(|((x, m), e)| regional * m * x * e)
            .collect(),
    )
}

pub fn sample_draw(
    case: &NetworkCase,
    regime: &str,
    spec: &DemandSpec,
    streams: &mut DemandStreams,
) -> Result<DemandDraw, DataError> {
    let r = spec.regimes.get(regime)?;
    let p = &spec.perturbation;
    let x0 = case.nominal_demand();
    let multipliers: Vec<f64> = (0..x0.len())
        .map(|_| uniform(&mut streams.regime, r.lo, r.hi))
        .collect();
    let regional = uniform(&mut streams.regional, p.regional.0, p.regional.1);
    let noise: Vec<f64> = (0..x0.len())
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut streams.individual);
            (p.noise_mu + p.noise_sigma * z).exp().clamp(p.noise_clip.0, p.noise_clip.1)
        })
        .collect();
    let demand = compose_demand(x0.values(), &multipliers, regional, &noise);
    Ok(DemandDraw {
        multipliers,
        regional,
        noise,
        demand,
    })
}

pub fn sample_demand(
    case: &NetworkCase,
    regime: &str,
    spec: &DemandSpec,
    streams: &mut DemandStreams,
) -> Result<DemandVector, DataError> {
    sample_draw(case, regime, spec, streams).map(|d| d.demand)
}

/// One solved training instance.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInstance {
    pub index: usize,
    pub regime: String,
    pub x: DemandVector,
    pub y: OpfSolution,
    pub a: ActiveSet,
}

/// Split `total` across `regimes` blocks; earlier regimes absorb the remainder.
pub fn split_counts(total: usize, regimes: usize) -> Vec<usize> {
    let base = total / regimes;
    let extra = total % regimes;
    (0..regimes).map(|t| base + usize::from(t < extra)).collect()
}

/// Labeled instances with `N` per regime, indexed `0..T·N` in regime order.
pub fn generate_labeled(
    case: &NetworkCase,
    spec: &DemandSpec,
    n_per_regime: usize,
    streams: &mut DemandStreams,
    oracle: &DcOracle,
) -> Result<Vec<LabeledInstance>, DataError> {
    let counts = vec![n_per_regime; spec.regimes.regimes.len()];
    generate_labeled_counts(case, spec, &counts, streams, oracle)
}

/// As [`generate_labeled`] with an explicit count per regime.
///
/// Infeasible draws are discarded and redrawn from the same streams; `100·N`
/// consecutive failures (at least 100) abort with [`DataError::Stalled`].
pub fn generate_labeled_counts(
    case: &NetworkCase,
    spec: &DemandSpec,
    counts: &[usize],
    streams: &mut DemandStreams,
    oracle: &DcOracle,
) -> Result<Vec<LabeledInstance>, DataError> {
    spec.validate()?;
    check_counts(spec, counts)?;
    let mut out = Vec::with_capacity(counts.iter().sum());
    for (regime, &n) in spec.regimes.regimes.iter().zip(counts) {
        let limit = (100 * n).max(100);
        for _ in 0..n {
            let mut failures = 0;
            loop {
                let x = sample_demand(case, &regime.name, spec, streams)?;
                match oracle.label(case, &x) {
                    Ok((y, a)) => {
                        out.push(LabeledInstance {
                            index: out.len(),
                            regime: regime.name.clone(),
                            x,
                            y,
                            a,
                        });
                        break;
                    }
                    Err(OpfError::Infeasible { .. }) => {
                        failures += 1;
                        if failures >= limit {
                            return Err(DataError::Stalled {
                                regime: regime.name.clone(),
                                attempts: failures,
                            });
                        }
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    Ok(out)
}

/// Unlabeled pool with `N` per regime, indices `0..T·N`. No solver calls.
pub fn generate_pool(
    case: &NetworkCase,
    spec: &DemandSpec,
    n_per_regime: usize,
    streams: &mut DemandStreams,
) -> Result<InstancePool, DataError> {
    let counts = vec![n_per_regime; spec.regimes.regimes.len()];
    generate_pool_counts(case, spec, &counts, streams)
}

pub fn generate_pool_counts(
    case: &NetworkCase,
    spec: &DemandSpec,
    counts: &[usize],
    streams: &mut DemandStreams,
) -> Result<InstancePool, DataError> {
    spec.validate()?;
    check_counts(spec, counts)?;
    let mut entries = Vec::with_capacity(counts.iter().sum());
    for (regime, &n) in spec.regimes.regimes.iter().zip(counts) {
        for _ in 0..n {
            entries.push(UnlabeledInstance {
                index: entries.len(),
                regime: regime.name.clone(),
                x: sample_demand(case, &regime.name, spec, streams)?,
            });
        }
    }
    Ok(InstancePool::from_unlabeled(entries))
}

fn check_counts(spec: &DemandSpec, counts: &[usize]) -> Result<(), DataError> {
    if counts.len() != spec.regimes.regimes.len() {
        return Err(DataError::InvalidSpec(format!(
            "{} counts for {} regimes",
            counts.len(),
            spec.regimes.regimes.len()
        )));
    }
    Ok(())
}
