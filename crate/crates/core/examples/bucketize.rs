//! Partition standardized 10-bus demands into k-means++ buckets and show the
//! Lloyd SSE trace and the regime mix of each bucket.
//!
//!     cargo run --example bucketize -- [k]

use opf_al::al::kmeanspp_buckets;
use opf_al::datagen::{generate_pool, DemandSpec, DemandStreams};
use opf_al::nn::Standardizer;
use opf_al::opf::cases;
use opf_al::rng::SeedStreams;

fn main() -> anyhow::Result<()> {
    let k: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(6);
    let case = cases::ten_bus();
    let seeds = SeedStreams::new(0);
    let pool = generate_pool(&case, &DemandSpec::default(), 300, &mut DemandStreams::new(&seeds, "pool"))?;
    let raw: Vec<Vec<f64>> = pool.unlabeled().map(|u| u.x.values().to_vec()).collect();
    let scaler = Standardizer::fit(&raw);
    let points: Vec<Vec<f64>> = raw.iter().map(|r| scaler.apply(r)).collect();
    let buckets = kmeanspp_buckets(&points, k, &mut seeds.stream("buckets"))?;

    let trace: Vec<String> = buckets.sse_trace.iter().map(|s| format!("{s:.1}")).collect();
    println!("SSE per Lloyd iteration: {}", trace.join(" "));
    let mut mix = vec![[0usize; 3]; k];
    for (u, p) in pool.unlabeled().zip(&points) {
        let r = ["low", "mid", "high"].iter().position(|n| *n == u.regime).unwrap();
        mix[buckets.assign(p)][r] += 1;
    }
    println!("bucket   low   mid  high");
    for (b, m) in mix.iter().enumerate() {
        println!("{b:>6} {:>5} {:>5} {:>5}", m[0], m[1], m[2]);
    }
    Ok(())
}
