//! Train the solution proxy and the active-set predictor on 10-bus data and
//! report test errors.
//!
//!     cargo run --release --example train_proxy

use opf_al::al::{self, ModelSpec};
use opf_al::datagen::{generate_labeled, DemandSpec, DemandStreams};
use opf_al::harness::compute_metrics;
use opf_al::nn::{self, LossKind, TrainConfig};
use opf_al::opf::{cases, DcOracle};
use opf_al::rng::SeedStreams;

fn main() -> anyhow::Result<()> {
    let case = cases::ten_bus();
    let seeds = SeedStreams::new(1);
    let spec = DemandSpec::default();
    let oracle = DcOracle::default();
    let train = generate_labeled(&case, &spec, 100, &mut DemandStreams::new(&seeds, "train"), &oracle)?;
    let test = generate_labeled(&case, &spec, 100, &mut DemandStreams::new(&seeds, "test"), &oracle)?;

    let (mut proxy, mut predictor) = al::init_models(&case, &train, &ModelSpec::default(), &seeds);
    println!("untrained: {:?}", compute_metrics(&proxy, &test)?);
    let x = al::inputs(&train);
    let report = nn::train(&mut proxy, &x, &al::targets(&train), LossKind::L2, &TrainConfig::default())?;
    println!(
        "proxy: {} epochs (best {}), holdout loss {:.4}",
        report.train_loss.len(),
        report.best_epoch,
        report.holdout_loss[report.best_epoch]
    );
    println!("trained:   {:?}", compute_metrics(&proxy, &test)?);

    nn::train(&mut predictor, &x, &al::active_bits(&train), LossKind::Bce, &TrainConfig::default())?;
    let (mut exact, mut bits_wrong) = (0, 0);
    for t in &test {
        let (pred, _) = nn::predict_active_set(&predictor, t.x.values(), 0.5)?;
        let d = pred.hamming(&t.a);
        exact += usize::from(d == 0);
        bits_wrong += d;
    }
    println!(
        "predictor: {exact}/{} active sets exact, {bits_wrong} wrong bits in total",
        test.len()
    );
    Ok(())
}
