mod common;

use std::collections::BTreeSet;

use common::{al_fixture, brute_knn, l1};
use opf_al::al::{
    self, acquisition_ig, candidate_pool, distribute, filter_select, kmeanspp_buckets, lloyd, select_delta, AlConfig,
    AlState, PoolPrediction, Variant,
};
use opf_al::nn::{self, softplus, Activation, Head, MlpModel};
use opf_al::opf::{cases, ActiveSet, DcOracle};
use opf_al::rng::SeedStreams;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};

fn gaussian_blobs(seed: u64, per: usize) -> Vec<Vec<f64>> {
    let mut rng = SeedStreams::new(seed).stream("blobs");
    let noise = Normal::new(0.0, 1.0).unwrap();
    let centers = [[0.0, 0.0], [20.0, 0.0], [0.0, 20.0], [20.0, 20.0]];
    centers
        .iter()
        .flat_map(|c| (0..per).map(|_| vec![c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)]).collect::<Vec<_>>())
        .collect()
}

/// Plain k-means from `k` distinct uniformly chosen points, run to a fixed point.
fn plain_kmeans_sse(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> f64 {
    let picks = rand::seq::index::sample(rng, points.len(), k);
    let mut centers: Vec<Vec<f64>> = picks.iter().map(|i| points[i].clone()).collect();
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    for _ in 0..500 {
        let mut sums = vec![vec![0.0; 2]; k];
        let mut counts = vec![0usize; k];
        for p in points {
            let j = (0..k).min_by(|&a, &b| sq(p, &centers[a]).total_cmp(&sq(p, &centers[b]))).unwrap();
            counts[j] += 1;
            sums[j][0] += p[0];
            sums[j][1] += p[1];
        }
        let next: Vec<Vec<f64>> = (0..k)
            .map(|j| if counts[j] == 0 { centers[j].clone() } else { sums[j].iter().map(|s| s / counts[j] as f64).collect() })
            .collect();
        if next == centers {
            break;
        }
        centers = next;
    }
    points
        .iter()
        .map(|p| centers.iter().map(|c| sq(p, c)).fold(f64::INFINITY, f64::min))
        .sum()
}

#[test]
fn kmeanspp_matches_best_of_fifty_restarts() {
    for seed in 0..5 {
        let points = gaussian_blobs(seed, 50);
        let ours = kmeanspp_buckets(&points, 4, &mut SeedStreams::new(seed).stream("kpp")).unwrap().sse(&points);
        let mut rng = SeedStreams::new(seed).stream("restarts");
        let best = (0..50).map(|_| plain_kmeans_sse(&points, 4, &mut rng)).fold(f64::INFINITY, f64::min);
        assert!(ours <= 1.05 * best, "seed {seed}: {ours} vs best restart {best}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lloyd_sse_never_increases(seed in 0u64..10_000, k in 1usize..6, n in 8usize..60, dim in 1usize..4) {
        let mut rng = SeedStreams::new(seed).stream("pts");
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        let set = kmeanspp_buckets(&points, k, &mut rng).unwrap();
        for w in set.sse_trace.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{:?}", set.sse_trace);
        }
        // Every point lands in exactly one bucket, the nearest one.
        for p in &points {
            let b = set.assign(p);
            prop_assert!(b < set.k());
            let d = l2sq(p, &set.centers[b]);
            for (j, c) in set.centers.iter().enumerate() {
                let dj = l2sq(p, c);
                prop_assert!(dj > d || (dj == d && j >= b));
            }
        }
    }

    #[test]
    fn candidate_pool_equals_brute_force_knn(seed in 0u64..10_000, k_a in 1usize..12) {
        let mut rng = SeedStreams::new(seed).stream("knn");
        let bits_len = 6;
        // Few bits so Hamming ties are common and the tie rules get exercised.
        let random_pred = |rng: &mut opf_al::rng::StreamRng, index| {
            let probs: Vec<f64> = (0..bits_len).map(|_| (rng.random_range(0..4) as f64) / 4.0).collect();
            let bits = probs.iter().map(|&p| u8::from(p >= 0.5)).collect();
            PoolPrediction { index, bits: ActiveSet::from_bits(bits), probs }
        };
        let pool: Vec<PoolPrediction> = (0..200).map(|i| random_pred(&mut rng, 3 * i + 1)).collect();
        let anchor = random_pred(&mut rng, 0);
        let got = candidate_pool(&anchor.bits, &anchor.probs, &pool, k_a);
        prop_assert_eq!(got, brute_knn(&anchor, &pool, k_a));
    }
}

fn l2sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Last hidden layer, computed straight from the weights.
fn manual_penultimate(m: &MlpModel, x: &[f64]) -> Vec<f64> {
    let dims = m.dims();
    let mut a = x.to_vec();
    for l in 0..m.num_layers() - 1 {
        let (w, b) = m.layer(l);
        a = (0..dims[l + 1])
            .map(|o| softplus(b[o] + (0..dims[l]).map(|i| w[o * dims[l] + i] * a[i]).sum::<f64>()))
            .collect();
    }
    a
}

#[test]
fn as_pen_selection_matches_brute_force_argmin() {
    for seed in 0..20 {
        let mut rng = SeedStreams::new(seed).stream("pen");
        let m = MlpModel::new(&[4, 12, 9, 3], Activation::Softplus, Head::Identity, &mut rng);
        let xs: Vec<Vec<f64>> = (0..40).map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let anchor: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let feats: Vec<Vec<f64>> = xs.iter().map(|x| al::features(Variant::AsPen, &m, x).unwrap()).collect();
        let excluded: BTreeSet<usize> = (0..40).filter(|i| i % 7 == 3).map(|i| 100 + i).collect();
        let cands: Vec<(usize, &[f64])> = feats.iter().enumerate().map(|(i, f)| (100 + i, f.as_slice())).collect();
        let got = select_delta(&al::features(Variant::AsPen, &m, &anchor).unwrap(), &cands, &excluded).unwrap();

        let target = manual_penultimate(&m, &anchor);
        let expect = (0..40)
            .filter(|i| !excluded.contains(&(100 + i)))
            .map(|i| (l1(&target, &manual_penultimate(&m, &xs[i])), 100 + i))
            .fold((f64::INFINITY, usize::MAX), |best, c| if c.0 < best.0 { c } else { best })
            .1;
        assert_eq!(got, expect, "seed {seed}");
    }
}

#[test]
fn acquisition_matches_finite_difference_gradients() {
    for seed in 0..10 {
        let mut rng = SeedStreams::new(seed).stream("acq");
        let m = MlpModel::new(&[3, 10, 10, 2], Activation::Softplus, Head::Identity, &mut rng);
        let pts: Vec<(Vec<f64>, Vec<f64>)> = (0..15)
            .map(|_| {
                let x = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
                let y = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
                (x, y)
            })
            .collect();
        let got = acquisition_ig(&m, pts.iter().map(|(x, y)| (x.as_slice(), y.as_slice()))).unwrap();
        let h = 1e-6;
        let norms: Vec<f64> = pts
            .iter()
            .map(|(x, y)| {
                let loss = |x: &[f64]| {
                    let p = m.forward(x).unwrap();
                    p.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
                };
                (0..3)
                    .map(|i| {
                        let (mut up, mut dn) = (x.clone(), x.clone());
                        up[i] += h;
                        dn[i] -= h;
                        ((loss(&up) - loss(&dn)) / (2.0 * h)).powi(2)
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        let expect = norms.iter().sum::<f64>() / norms.len() as f64;
        assert!((got - expect).abs() <= 1e-6 * expect.max(1.0), "seed {seed}: {got} vs {expect}");
    }
}

#[test]
fn acquisition_of_an_exact_model_is_zero() {
    let m = MlpModel::zeros(&[2, 4, 1], Activation::Softplus, Head::Identity);
    let x = [0.3, -0.2];
    let y = m.forward(&x).unwrap();
    assert_eq!(acquisition_ig(&m, [(&x[..], &y[..])]).unwrap(), 0.0);
    assert_eq!(acquisition_ig(&m, std::iter::empty()).unwrap(), 0.0);
}

#[test]
fn filter_greedy_part_is_the_top_losses() {
    for seed in 0..30 {
        let mut rng = SeedStreams::new(seed).stream("filter");
        let cands: Vec<(usize, f64)> = (0..20).map(|i| (i, rng.random_range(0.0..10.0))).collect();
        let sel = filter_select(&cands, 5, 0.4, &mut rng);
        let mut by_loss = cands.clone();
        by_loss.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let top2: Vec<usize> = by_loss[..2].iter().map(|c| c.0).collect();
        assert_eq!(sel.greedy, top2);
        assert_eq!(sel.random.len(), 3);
        let all: BTreeSet<usize> = sel.anchors().collect();
        assert_eq!(all.len(), 5);

        assert!(filter_select(&cands, 4, 0.0, &mut rng).greedy.is_empty());
        assert!(filter_select(&cands, 4, 1.0, &mut rng).random.is_empty());
    }
    let small: Vec<(usize, f64)> = vec![(0, 1.0), (1, 2.0)];
    let sel = filter_select(&small, 5, 0.5, &mut SeedStreams::new(0).stream("s"));
    assert_eq!(sel.shortfall, 3);
    assert_eq!(sel.anchors().count(), 2);
}

#[test]
fn forced_round_queries_the_match_of_the_worst_validation_point() {
    let case = cases::ten_bus();
    for seed in 0..3 {
        let mut state = al_fixture(&case, seed, [20, 30, 60], 1);
        let cfg = AlConfig {
            budget: 1,
            buckets: 1,
            psi: 1.0,
            k_a: 5,
            variant: Variant::AsRaw,
            ..AlConfig::default()
        };
        // Worst validation point under the ℓ2 loss.
        let worst = (0..state.validation.len())
            .map(|i| {
                let v = &state.validation[i];
                let p = state.proxy.forward(v.x.values()).unwrap();
                (p.iter().zip(v.y.target()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(), i)
            })
            .fold((f64::NEG_INFINITY, 0), |b, c| if c.0 > b.0 { c } else { b })
            .1;
        let predictor = state.predictor.clone().unwrap();
        let ax = state.validation[worst].x.values().to_vec();
        let (abits, aprobs) = nn::predict_active_set(&predictor, &ax, cfg.threshold).unwrap();
        let pool: Vec<PoolPrediction> = state
            .pool
            .unlabeled()
            .map(|u| {
                let (bits, probs) = nn::predict_active_set(&predictor, u.x.values(), cfg.threshold).unwrap();
                PoolPrediction { index: u.index, bits, probs }
            })
            .collect();
        let anchor = PoolPrediction { index: usize::MAX, bits: abits, probs: aprobs };
        let cands = brute_knn(&anchor, &pool, cfg.k_a);
        let expect = cands
            .iter()
            .map(|&i| (l1(&ax, state.pool.get_unlabeled(i).unwrap().x.values()), i))
            .fold((f64::INFINITY, 0), |b, c| if c.0 < b.0 { c } else { b })
            .1;

        let audit = al::al_round(&mut state, &cfg, 1, &mut DcOracle::default(), &mut SeedStreams::new(seed).stream("sel")).unwrap();
        let first = audit.skipped.first().or(audit.queried.first()).copied();
        assert_eq!(first, Some(expect), "seed {seed}");
        assert_eq!(audit.queried.len(), 1);
    }
}

fn check_round(state: &AlState, before_train: usize, before_total: usize, audit: &al::RoundAudit, budget: usize) {
    assert_eq!(audit.queried.len(), budget, "{:?}", audit.variant);
    assert!(!audit.partial);
    assert_eq!(state.train.len(), before_train + budget);
    assert_eq!(state.pool.total(), before_total);
    let unique: BTreeSet<usize> = audit.queried.iter().chain(&audit.skipped).copied().collect();
    assert_eq!(unique.len(), audit.queried.len() + audit.skipped.len());
    for i in &unique {
        assert!(state.pool.get_unlabeled(*i).is_none());
    }
    let labeled: BTreeSet<usize> = state.pool.labeled().iter().map(|l| l.index).collect();
    assert_eq!(labeled.len(), state.pool.labeled().len());
    assert!(state.pool.unlabeled().all(|u| !labeled.contains(&u.index)));
}

#[test]
fn every_variant_queries_exactly_the_budget_over_twenty_seeds() {
    let case = cases::ten_bus();
    for seed in 0..20 {
        let base = al_fixture(&case, seed, [20, 30, 90], 3);
        for variant in Variant::ALL {
            let mut state = base.clone();
            let cfg = AlConfig {
                budget: 12,
                buckets: 3,
                k_a: 4,
                variant,
                ..AlConfig::default()
            };
            let mut rng = SeedStreams::new(seed).stream(variant.name());
            for r in 1..=3 {
                let (t, n) = (state.train.len(), state.pool.total());
                let audit = al::al_round(&mut state, &cfg, r, &mut DcOracle::default(), &mut rng).unwrap();
                check_round(&state, t, n, &audit, cfg.budget);
                if variant != Variant::Random {
                    assert_eq!(audit.allocation, distribute(&audit.scores, cfg.budget));
                    assert_eq!(audit.allocation.iter().sum::<usize>(), cfg.budget);
                }
            }
        }
    }
}

#[test]
fn rounds_are_bit_for_bit_reproducible() {
    let case = cases::ten_bus();
    for variant in Variant::ALL {
        let run = || {
            let mut state = al_fixture(&case, 7, [20, 30, 90], 3);
            let cfg = AlConfig { budget: 10, buckets: 3, variant, ..AlConfig::default() };
            let mut audit = al::al_round(&mut state, &cfg, 1, &mut DcOracle::default(), &mut SeedStreams::new(7).stream("x")).unwrap();
            audit.wall_time_s = 0.0;
            (audit, state.train)
        };
        assert_eq!(run(), run());
    }
}

#[test]
fn single_bucket_basig_is_random_sampling() {
    let case = cases::ten_bus();
    for seed in 0..5 {
        let base = al_fixture(&case, seed, [20, 30, 60], 1);
        let query = |variant| {
            let mut state = base.clone();
            let cfg = AlConfig { budget: 8, buckets: 1, variant, ..AlConfig::default() };
            al::al_round(&mut state, &cfg, 1, &mut DcOracle::default(), &mut SeedStreams::new(seed).stream("same"))
                .unwrap()
                .queried
        };
        assert_eq!(query(Variant::BasIg), query(Variant::Random));
    }
}

#[test]
fn basig_per_bucket_counts_follow_the_allocation() {
    let case = cases::two_bus();
    for seed in 0..20 {
        let mut state = al_fixture(&case, seed, [20, 30, 200], 4);
        let cfg = AlConfig { budget: 20, buckets: 4, ..AlConfig::default() };
        let audit = al::run_baseline_basig(&mut state, &cfg, 1, &mut DcOracle::default(), &mut SeedStreams::new(seed).stream("b")).unwrap();
        let mut counts = vec![0; 4];
        for i in &audit.queried {
            counts[state.pool_bucket(*i).unwrap()] += 1;
        }
        if audit.reallocated == 0 {
            assert_eq!(counts, audit.allocation, "seed {seed}");
        }
        assert_eq!(counts, audit.realized);
        assert_eq!(counts.iter().sum::<usize>(), cfg.budget);
    }
}

#[test]
fn zero_scores_give_a_uniform_allocation() {
    let case = cases::two_bus();
    let mut state = al_fixture(&case, 3, [20, 30, 200], 4);
    let dims = state.proxy.dims().to_vec();
    state.proxy = MlpModel::zeros(&dims, Activation::Softplus, Head::Identity);
    let cfg = AlConfig { budget: 10, buckets: 4, variant: Variant::BasIg, ..AlConfig::default() };
    let audit = al::al_round(&mut state, &cfg, 1, &mut DcOracle::default(), &mut SeedStreams::new(3).stream("z")).unwrap();
    assert!(audit.scores.iter().all(|&s| s == 0.0));
    assert_eq!(audit.allocation, vec![3, 3, 2, 2]);
    assert_eq!(audit.queried.len(), 10);
}

#[test]
fn lloyd_from_given_centers_converges_on_two_clusters() {
    let points = vec![vec![0.0], vec![0.2], vec![10.0], vec![10.4]];
    let set = lloyd(&points, vec![vec![0.0], vec![0.2]], 100);
    let mut c: Vec<f64> = set.centers.iter().map(|c| c[0]).collect();
    c.sort_by(f64::total_cmp);
    assert_eq!(c, vec![0.1, 10.2]);
}
