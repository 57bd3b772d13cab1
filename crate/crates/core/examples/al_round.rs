//! One active-learning round of each variant from the same starting point,
//! printing the bucket scores, the allocation and the queried pool indices.
//!
//!     cargo run --release --example al_round

use opf_al::al::{self, AlConfig, AlState, Variant};
use opf_al::harness::{ExperimentConfig, SeedContext};
use opf_al::opf::DcOracle;
use opf_al::rng::SeedStreams;

fn main() -> anyhow::Result<()> {
    let cfg = ExperimentConfig::default();
    let case = cfg.load_case()?;
    let ctx = SeedContext::build(&cfg, &case, 0)?;
    let seeds = SeedStreams::new(0);
    for variant in Variant::ALL {
        let mut state = AlState::new(
            case.clone(),
            ctx.d0.clone(),
            ctx.validation.clone(),
            ctx.pool.clone(),
            cfg.al.buckets,
            &mut seeds.stream("buckets"),
            ctx.proxy.clone(),
            Some(ctx.predictor.clone()),
        )?;
        let al_cfg = AlConfig { variant, ..cfg.al.clone() };
        let audit = al::al_round(&mut state, &al_cfg, 1, &mut DcOracle::default(), &mut seeds.stream(variant.name()))?;
        let scores: Vec<String> = audit.scores.iter().map(|s| format!("{s:.3}")).collect();
        println!("{variant}");
        println!("  scores     [{}]", scores.join(", "));
        println!("  allocation {:?}", audit.allocation);
        println!("  realized   {:?}", audit.realized);
        println!("  queried    {:?}", audit.queried);
    }
    Ok(())
}
