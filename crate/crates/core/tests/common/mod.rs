//! Shared oracles for the integration tests.
#![allow(dead_code)]

use opf_al::al::PoolPrediction;
use opf_al::nn::{Activation, Head, MlpModel, Standardizer};
use opf_al::opf::{Branch, Bus, DemandVector, Generator, NetworkCase};
use opf_al::rng::SeedStreams;
use rand::Rng;

/// DC-OPF in equality form `A z = rhs`, `lo ≤ z ≤ hi`, assembled directly from
/// the case data with variables `[p_g | θ | f]`.
pub struct DenseLp {
    pub a: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub cost: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

pub fn assemble(case: &NetworkCase, demand: &DemandVector) -> DenseLp {
    let (g, n, e) = (case.generators().len(), case.buses().len(), case.branches().len());
    let cols = g + n + e;
    let mut a = vec![vec![0.0; cols]; n + e];
    let mut rhs = vec![0.0; n + e];
    let mut cost = vec![0.0; cols];
    let mut lo = vec![f64::NEG_INFINITY; cols];
    let mut hi = vec![f64::INFINITY; cols];
    let pos = |id: u32| case.buses().iter().position(|b| b.id == id).unwrap();
    for (j, gen) in case.generators().iter().enumerate() {
        a[pos(gen.bus)][j] += 1.0;
        cost[j] = gen.cost;
        lo[j] = gen.pmin;
        hi[j] = gen.pmax;
    }
    let ref_pos = case.buses().iter().position(|b| b.is_ref).unwrap();
    lo[g + ref_pos] = 0.0;
    hi[g + ref_pos] = 0.0;
    let loads: Vec<usize> = (0..n).filter(|&i| case.buses()[i].pd > 0.0).collect();
    for (&i, d) in loads.iter().zip(demand.values()) {
        rhs[i] = *d;
    }
    for (k, br) in case.branches().iter().enumerate() {
        let (i, j) = (pos(br.from), pos(br.to));
        let col = g + n + k;
        // Power leaves `from` and arrives at `to`.
        a[i][col] -= 1.0;
        a[j][col] += 1.0;
        let s = case.base_mva * br.b;
        a[n + k][col] = 1.0;
        a[n + k][g + i] -= s;
        a[n + k][g + j] += s;
        let (x, y) = (s * br.angmin, s * br.angmax);
        lo[col] = x.min(y).max(-br.rate);
        hi[col] = x.max(y).min(br.rate);
    }
    DenseLp { a, rhs, cost, lo, hi }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_dense(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-10 {
            return None;
        }
        m.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            if f != 0.0 {
                for k in c..n {
                    m[r][k] -= f * m[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    Some(x)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Minimum objective over every basic solution: each choice of `m` basic
/// columns, with every nonbasic column at one of its finite bounds (or 0 when
/// free), solved exactly and kept if it satisfies all bounds. `None` when no
/// basic solution is feasible.
pub fn brute_force_min(lp: &DenseLp) -> Option<(f64, Vec<f64>)> {
    let m = lp.rhs.len();
    let n = lp.cost.len();
    let tol = 1e-7;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for basis in combinations(n, m) {
        let nonbasic: Vec<usize> = (0..n).filter(|j| !basis.contains(j)).collect();
        let choices: Vec<Vec<f64>> = nonbasic
            .iter()
            .map(|&j| {
                let mut c = Vec::new();
                if lp.lo[j].is_finite() {
                    c.push(lp.lo[j]);
                }
                if lp.hi[j].is_finite() && lp.hi[j] != lp.lo[j] {
                    c.push(lp.hi[j]);
                }
                if c.is_empty() {
                    c.push(0.0);
                }
                c
            })
            .collect();
        let total: usize = choices.iter().map(Vec::len).product();
        for code in 0..total {
            let mut z = vec![0.0; n];
            let mut rest = code;
            for (t, &j) in nonbasic.iter().enumerate() {
                z[j] = choices[t][rest % choices[t].len()];
                rest /= choices[t].len();
            }
            let rhs: Vec<f64> = (0..m)
                .map(|r| lp.rhs[r] - nonbasic.iter().map(|&j| lp.a[r][j] * z[j]).sum::<f64>())
                .collect();
            let bm: Vec<Vec<f64>> = (0..m).map(|r| basis.iter().map(|&j| lp.a[r][j]).collect()).collect();
            let Some(xb) = solve_dense(bm, rhs) else { continue };
            for (&j, v) in basis.iter().zip(&xb) {
                z[j] = *v;
            }
            let ok = (0..n).all(|j| z[j] >= lp.lo[j] - tol && z[j] <= lp.hi[j] + tol);
            if ok {
                let obj: f64 = z.iter().zip(&lp.cost).map(|(a, b)| a * b).sum();
                if best.as_ref().is_none_or(|(o, _)| obj < *o) {
                    best = Some((obj, z));
                }
            }
        }
    }
    best
}

/// A random connected case with 1–3 buses, 1–3 generators and, for three buses,
/// either a path or a triangle. About a third of the branches get tight angle limits.
pub fn random_small_case(rng: &mut impl Rng) -> NetworkCase {
    let n = rng.random_range(1..=3u32);
    let ref_id = rng.random_range(1..=n);
    let mut buses: Vec<Bus> = (1..=n)
        .map(|id| Bus {
            id,
            is_ref: id == ref_id,
            pd: if rng.random_bool(0.7) { rng.random_range(5.0..60.0) } else { 0.0 },
            qd: None,
            vmin: None,
            vmax: None,
            gs: None,
            bs: None,
        })
        .collect();
    if buses.iter().all(|b| b.pd == 0.0) {
        buses[0].pd = rng.random_range(5.0..60.0);
    }
    let generators = (0..rng.random_range(1..=3))
        .map(|_| {
            let pmin = if rng.random_bool(0.3) { rng.random_range(0.0..10.0) } else { 0.0 };
            Generator {
                bus: rng.random_range(1..=n),
                cost: rng.random_range(1.0..50.0),
                pmin,
                pmax: pmin + rng.random_range(10.0..90.0),
                qmin: None,
                qmax: None,
            }
        })
        .collect();
    let mut pairs = Vec::new();
    for id in 2..=n {
        pairs.push((id - 1, id));
    }
    if n == 3 && rng.random_bool(0.5) {
        pairs.push((3, 1));
    }
    let branches = pairs
        .into_iter()
        .map(|(from, to)| {
            let tight = rng.random_bool(0.3);
            let lim = rng.random_range(0.02..0.2);
            Branch {
                from,
                to,
                b: rng.random_range(2.0..20.0),
                rate: rng.random_range(10.0..80.0),
                angmin: if tight { -lim } else { -std::f64::consts::FRAC_PI_2 },
                angmax: if tight { lim } else { std::f64::consts::FRAC_PI_2 },
                r: None,
                x: None,
            }
        })
        .collect();
    NetworkCase::new("random".into(), 100.0, buses, generators, branches).unwrap()
}

/// A demand around nominal, scaled by a random factor in `[0.3, 1.8)`.
pub fn random_demand(case: &NetworkCase, rng: &mut impl Rng) -> DemandVector {
    let s = rng.random_range(0.3..1.8);
    DemandVector(case.nominal_demand().values().iter().map(|d| d * s).collect())
}

/// A small active-learning state with freshly initialized (untrained) models.
pub fn al_fixture(case: &NetworkCase, seed: u64, sizes: [usize; 3], k: usize) -> opf_al::al::AlState {
    use opf_al::al::{self, AlState, ModelSpec};
    use opf_al::datagen::{generate_labeled_counts, generate_pool_counts, split_counts, DemandSpec, DemandStreams};
    use opf_al::opf::DcOracle;

    let seeds = SeedStreams::new(seed);
    let spec = DemandSpec::default();
    let r = spec.regimes.regimes.len();
    let oracle = DcOracle::default();
    let labeled = |name: &str, n: usize| {
        generate_labeled_counts(case, &spec, &split_counts(n, r), &mut DemandStreams::new(&seeds, name), &oracle).unwrap()
    };
    let d0 = labeled("d0", sizes[0]);
    let validation = labeled("validation", sizes[1]);
    let pool = generate_pool_counts(case, &spec, &split_counts(sizes[2], r), &mut DemandStreams::new(&seeds, "pool")).unwrap();
    let model = ModelSpec {
        width: Some(16),
        ..ModelSpec::default()
    };
    let (proxy, predictor) = al::init_models(case, &d0, &model, &seeds);
    AlState::new(
        case.clone(),
        d0,
        validation,
        pool,
        k,
        &mut seeds.stream("buckets"),
        proxy,
        Some(predictor),
    )
    .unwrap()
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Normwise relative error `‖a − b‖∞ / max(‖a‖∞, ‖b‖∞)`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = a.iter().chain(b).map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

pub fn random_model(rng: &mut impl Rng, seed: u64, head: Head) -> MlpModel {
    let n_in = rng.random_range(1..5);
    let hidden = rng.random_range(1..4);
    let mut dims = vec![n_in];
    for _ in 0..hidden {
        dims.push(rng.random_range(2..9));
    }
    dims.push(rng.random_range(1..5));
    let mut m = MlpModel::new(&dims, Activation::Softplus, head, &mut SeedStreams::new(seed).stream("init"));
    m.set_input_standardizer(Standardizer {
        mean: (0..n_in).map(|_| rng.random_range(-1.0..1.0)).collect(),
        scale: (0..n_in).map(|_| rng.random_range(0.5..2.0)).collect(),
    });
    if head == Head::Identity {
        let d = m.output_dim();
        m.set_output_standardizer(Standardizer {
            mean: (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
            scale: (0..d).map(|_| rng.random_range(0.5..3.0)).collect(),
        });
    }
    m
}

pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut p = x.to_vec();
            let mut q = x.to_vec();
            p[i] += h;
            q[i] -= h;
            (f(&p) - f(&q)) / (2.0 * h)
        })
        .collect()
}

/// k passes of "take the smallest remaining key".
pub fn brute_knn(anchor: &PoolPrediction, pool: &[PoolPrediction], k: usize) -> Vec<usize> {
    let key = |p: &PoolPrediction| {
        let ham = anchor.bits.bits().iter().zip(p.bits.bits()).filter(|(a, b)| a != b).count();
        (ham, l1(&anchor.probs, &p.probs), p.index)
    };
    let mut taken = vec![false; pool.len()];
    let mut out = Vec::new();
    for _ in 0..k.min(pool.len()) {
        let mut best: Option<(usize, (usize, f64, usize))> = None;
        for (i, p) in pool.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let kk = key(p);
            let better = match &best {
                None => true,
                Some((_, b)) => kk.0 < b.0 || (kk.0 == b.0 && (kk.1 < b.1 || (kk.1 == b.1 && kk.2 < b.2))),
            };
            if better {
                best = Some((i, kk));
            }
        }
        let (i, kk) = best.unwrap();
        taken[i] = true;
        out.push(kk.2);
    }
    out
}
