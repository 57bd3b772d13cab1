//! Run all four sampling strategies on the bundled 10-bus case and print the
//! seed-averaged final-round errors.
//!
//!     cargo run --release --example compare_variants -- [seeds] [out_dir]

use opf_al::al::Variant;
use opf_al::harness::{run_experiment, ExperimentConfig};

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let cfg = ExperimentConfig {
        seeds: (0..seeds).collect(),
        out_dir: args.next().map(Into::into),
        ..ExperimentConfig::default()
    };
    let started = std::time::Instant::now();
    let result = run_experiment(&cfg)?;
    println!("{:<8} {:>10} {:>10} {:>10}", "variant", "mean_l1", "p90", "queried");
    for v in Variant::ALL {
        if let Some(r) = result.final_aggregate(v) {
            println!("{:<8} {:>10.4} {:>10.4} {:>10}", v.name(), r.mean_l1, r.p90, r.queried_total);
        }
    }
    println!("{} cell(s) failed; {:.1}s", result.failures.len(), started.elapsed().as_secs_f64());
    Ok(())
}
