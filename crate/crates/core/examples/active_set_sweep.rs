//! Sweep the load of the three-bus case and report every change of the optimal
//! active set. The 1-3 line congests before the cheap generator runs out.
//!
//!     cargo run --example active_set_sweep

use opf_al::opf::{cases, describe_constraint, extract_active_set, solve_dcopf, ActiveSet, DemandVector, EPS_ACTIVE};

fn main() -> anyhow::Result<()> {
    let case = cases::three_bus();
    let mut last: Option<ActiveSet> = None;
    for step in 0..=130 {
        let d = step as f64;
        let sol = match solve_dcopf(&case, &DemandVector(vec![d])) {
            Ok(s) => s,
            Err(e) => {
                println!("{d:>5} MW: {e}");
                break;
            }
        };
        let active = extract_active_set(&case, &sol, EPS_ACTIVE);
        if last.as_ref() != Some(&active) {
            let names: Vec<String> = (0..active.len())
                .filter(|&k| active.get(k))
                .map(|k| describe_constraint(&case, k))
                .collect();
            println!("{d:>5} MW: marginal cost {:.2}, active [{}]", marginal(&case, d)?, names.join("; "));
            last = Some(active);
        }
    }
    Ok(())
}

fn marginal(case: &opf_al::opf::NetworkCase, d: f64) -> anyhow::Result<f64> {
    // One-sided toward the feasible interior.
    let h = if d >= 1e-3 { -1e-3 } else { 1e-3 };
    let near = solve_dcopf(case, &DemandVector(vec![d + h]))?.objective;
    let here = solve_dcopf(case, &DemandVector(vec![d]))?.objective;
    Ok((near - here) / h)
}
