//! Draw a labeled dataset on the 10-bus case, write it as CSV and summarize the
//! active sets per regime.
//!
//!     cargo run --example generate_dataset -- [per_regime] [out.csv]

use std::collections::BTreeMap;

use opf_al::datagen::{generate_labeled, write_labeled, DemandSpec, DemandStreams};
use opf_al::opf::{cases, DcOracle};
use opf_al::rng::SeedStreams;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let per_regime: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100);
    let out = args.next().unwrap_or_else(|| "ten_bus_labeled.csv".into());
    let case = cases::ten_bus();
    let seeds = SeedStreams::new(0);
    let data = generate_labeled(
        &case,
        &DemandSpec::default(),
        per_regime,
        &mut DemandStreams::new(&seeds, "example"),
        &DcOracle::default(),
    )?;
    write_labeled(&out, &case, &data)?;
    println!("wrote {} instances to {out}", data.len());

    let mut per: BTreeMap<(&str, String), usize> = BTreeMap::new();
    for d in &data {
        let bits: String = d.a.bits().iter().map(|b| char::from(b'0' + b)).collect();
        *per.entry((d.regime.as_str(), bits)).or_default() += 1;
    }
    for ((regime, bits), n) in per {
        println!("{regime:<5} {n:>4}  {bits}");
    }
    Ok(())
}
