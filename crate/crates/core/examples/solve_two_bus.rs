//! Solve the two-bus case below and above the cheap generator's limit and show
//! how the active set and the optimality certificate change.
//!
//!     cargo run --example solve_two_bus

use opf_al::opf::{cases, describe_constraint, extract_active_set, solve_dcopf_certified, DemandVector, EPS_ACTIVE};

fn main() -> anyhow::Result<()> {
    let case = cases::two_bus();
    for demand in [30.16, 40.0, 55.0, 120.0] {
        let (sol, cert) = solve_dcopf_certified(&case, &DemandVector(vec![demand]))?;
        let active = extract_active_set(&case, &sol, EPS_ACTIVE);
        println!(
            "demand {demand:>6.2}: p_g = [{:.2}, {:.2}], cost {:.2}, gap {:.1e}",
            sol.p_g[0], sol.p_g[1], sol.objective, cert.duality_gap
        );
        for k in (0..active.len()).filter(|&k| active.get(k)) {
            println!("    {}", describe_constraint(&case, k));
        }
    }
    Ok(())
}
