use std::fs;

use opf_al::al::{AlConfig, Variant};
use opf_al::harness::{
    compute_metrics, l1_errors, psi_sweep, run_experiment, DataSizes, ExperimentConfig, SeedContext, METRICS_HEADER,
};
use opf_al::nn::TrainConfig;
use opf_al::rng::SeedStreams;
use rand::Rng;

fn quick_config(variants: Vec<Variant>, seeds: Vec<u64>, rounds: usize) -> ExperimentConfig {
    let train = TrainConfig {
        epochs: 40,
        patience: 10,
        ..TrainConfig::default()
    };
    ExperimentConfig {
        case: "two_bus".into(),
        sizes: DataSizes {
            initial: 24,
            validation: 24,
            pool: 90,
            test: 30,
        },
        al: AlConfig {
            rounds,
            budget: 6,
            buckets: 3,
            k_a: 4,
            ..AlConfig::default()
        },
        variants,
        seeds,
        train: train.clone(),
        retrain: train,
        ..ExperimentConfig::default()
    }
}

#[test]
fn minimal_run_writes_one_row_and_the_documented_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        out_dir: Some(dir.path().to_path_buf()),
        ..quick_config(vec![Variant::Random], vec![3], 1)
    };
    let res = run_experiment(&cfg).unwrap();
    assert!(res.failures.is_empty());
    assert_eq!(res.rows.len(), 1);
    assert_eq!(res.aggregate.len(), 1);
    assert_eq!(res.rows[0].queried_total, 6);
    assert_eq!(res.aggregate[0].seed, "avg");

    let text = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), METRICS_HEADER.join(","));
    assert_eq!(text.lines().count(), 2);
    let agg = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    assert!(agg.lines().nth(1).unwrap().starts_with("Random,avg,1,"));
    assert!(dir.path().join("cells/Random_seed3.csv").exists());
    assert!(dir.path().join("audit/Random_seed3.json").exists());
}

#[test]
fn identical_configs_give_identical_bytes() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            out_dir: Some(dir.path().to_path_buf()),
            ..quick_config(Variant::ALL.to_vec(), vec![0, 1], 2)
        };
        run_experiment(&cfg).unwrap();
        (
            fs::read(dir.path().join("metrics.csv")).unwrap(),
            fs::read(dir.path().join("aggregate.csv")).unwrap(),
        )
    };
    assert_eq!(run(), run());
}

#[test]
fn row_counts_percentile_order_and_shared_datasets() {
    let rounds = 2;
    let res = run_experiment(&quick_config(Variant::ALL.to_vec(), (0..10).collect(), rounds)).unwrap();
    assert!(res.failures.is_empty());
    assert_eq!(res.rows.len(), 40 * rounds);
    assert_eq!(res.aggregate.len(), 4 * rounds);
    for r in res.rows.iter().chain(&res.aggregate) {
        assert!(r.p70 <= r.p80 && r.p80 <= r.p90, "{r:?}");
    }
    for r in &res.rows {
        assert_eq!(r.queried_total, 6 * r.round);
    }
    // Every variant of a seed saw the same datasets.
    for seed in 0..10 {
        let hashes: Vec<_> = res.audits.iter().filter(|a| a.seed == seed).map(|a| &a.dataset_hashes).collect();
        assert_eq!(hashes.len(), 4);
        assert!(hashes.windows(2).all(|w| w[0] == w[1]));
    }
    let a0 = res.audits.iter().find(|a| a.seed == 0).unwrap();
    let a1 = res.audits.iter().find(|a| a.seed == 1).unwrap();
    assert_ne!(a0.dataset_hashes, a1.dataset_hashes);
}

/// Walk the grid `i/(n−1)` until it brackets `q`, then interpolate.
fn grid_percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    for i in 0..n - 1 {
        let (a, b) = (i as f64 / (n - 1) as f64, (i + 1) as f64 / (n - 1) as f64);
        if q >= a && q <= b {
            return sorted[i] + (q - a) / (b - a) * (sorted[i + 1] - sorted[i]);
        }
    }
    sorted[n - 1]
}

#[test]
fn metrics_agree_with_an_independent_order_statistic_routine() {
    let cfg = quick_config(vec![Variant::Random], vec![5], 1);
    let case = cfg.load_case().unwrap();
    let ctx = SeedContext::build(&cfg, &case, 5).unwrap();
    let m = compute_metrics(&ctx.proxy, &ctx.test).unwrap();
    let mut errs: Vec<f64> = ctx
        .test
        .iter()
        .map(|t| {
            let p = ctx.proxy.forward(t.x.values()).unwrap();
            p.iter().zip(t.y.target()).map(|(a, b)| (a - b).abs()).sum()
        })
        .collect();
    assert_eq!(errs, l1_errors(&ctx.proxy, &ctx.test).unwrap());
    errs.sort_by(f64::total_cmp);
    assert!((m.p70 - grid_percentile(&errs, 0.7)).abs() <= 1e-12);
    assert!((m.p80 - grid_percentile(&errs, 0.8)).abs() <= 1e-12);
    assert!((m.p90 - grid_percentile(&errs, 0.9)).abs() <= 1e-12);
    assert!((m.mean_l1 - errs.iter().sum::<f64>() / errs.len() as f64).abs() <= 1e-12);

    let mut rng = SeedStreams::new(9).stream("samples");
    for n in 1..40 {
        let mut xs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
        xs.sort_by(f64::total_cmp);
        for q in [0.0, 0.25, 0.7, 0.8, 0.9, 1.0] {
            let got = opf_al::harness::percentile(&xs, q);
            assert!((got - grid_percentile(&xs, q)).abs() <= 1e-12, "n {n} q {q}");
        }
    }
}

#[test]
fn single_psi_sweep_matches_a_plain_run() {
    let cfg = quick_config(vec![Variant::AsRaw, Variant::AsPen], vec![0, 1], 2);
    let sweep = psi_sweep(&cfg, &[0.4]).unwrap();
    let plain = run_experiment(&cfg).unwrap();
    assert_eq!(sweep.len(), 2);
    for row in &sweep {
        let v: Variant = row.variant.parse().unwrap();
        let fin = plain.final_aggregate(v).unwrap();
        assert_eq!(row.psi, 0.4);
        assert_eq!(row.p90, fin.p90);
        assert_eq!(row.mean_l1, fin.mean_l1);
    }
    let three = psi_sweep(&cfg, &[0.1, 0.5, 0.9]).unwrap();
    for v in ["AS_raw", "AS_pen"] {
        assert_eq!(three.iter().filter(|r| r.variant == v).count(), 3);
    }
    assert!(psi_sweep(&cfg, &[1.5]).is_err());
}

#[test]
fn config_json_fills_defaults_and_rejects_small_pools() {
    let cfg = ExperimentConfig::from_json(r#"{"case": "two_bus", "al": {"rounds": 2}}"#).unwrap();
    assert_eq!(cfg.al.rounds, 2);
    assert_eq!(cfg.al.budget, AlConfig::default().budget);
    assert_eq!(cfg.sizes, DataSizes::default());
    cfg.validate().unwrap();

    let small = ExperimentConfig {
        sizes: DataSizes { pool: 10, ..DataSizes::default() },
        ..cfg
    };
    assert!(small.validate().is_err());
    assert!(ExperimentConfig::from_json(r#"{"cases": 1}"#).is_err());
}

#[test]
fn a_failing_cell_does_not_stop_the_others() {
    // The predictor-free variants run; AS_pen needs a penultimate layer the
    // single-layer proxy does not have.
    let mut cfg = quick_config(vec![Variant::Random, Variant::AsPen], vec![0], 1);
    cfg.model.hidden_layers = 0;
    let res = run_experiment(&cfg).unwrap();
    assert_eq!(res.rows.len(), 1);
    assert_eq!(res.rows[0].variant, "Random");
    assert_eq!(res.failures.len(), 1);
    assert_eq!(res.failures[0].0, Variant::AsPen);
}
