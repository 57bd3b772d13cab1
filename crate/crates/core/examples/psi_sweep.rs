//! Final-round errors of AS_raw and AS_pen as the greedy share ψ of anchors
//! grows.
//!
//!     cargo run --release --example psi_sweep -- [seeds]

use opf_al::harness::{psi_sweep, ExperimentConfig};

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let seeds: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let cfg = ExperimentConfig {
        seeds: (0..seeds).collect(),
        ..ExperimentConfig::default()
    };
    println!("{:<8} {:>5} {:>10} {:>10}", "variant", "psi", "mean_l1", "p90");
    for r in psi_sweep(&cfg, &[0.1, 0.5, 0.9])? {
        println!("{:<8} {:>5} {:>10.4} {:>10.4}", r.variant, r.psi, r.mean_l1, r.p90);
    }
    Ok(())
}
