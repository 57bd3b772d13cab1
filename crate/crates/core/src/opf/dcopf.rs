//! DC optimal power flow as a bounded-variable LP.
//!
//! Variable layout: `[p_g (|G|) | θ (|N|) | f (|E|)]`.
//! Row layout: one nodal balance per bus, then one flow definition
//! `f_e − base·b_e·(θ_from − θ_to) = 0` per branch.
//! Thermal and angle-difference limits both bound `f_e`, so each branch's flow
//! variable carries the intersection of the two intervals.

use serde::{Deserialize, Serialize};

use super::{DemandVector, NetworkCase, OpfError};
use crate::lp::{self, LinearProgram, LpError};

/// Primal feasibility tolerance on MW and rad residuals.
pub const EPS_FEAS: f64 = 1e-7;
/// Complementary slackness / duality gap tolerance.
pub const EPS_CS: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpfSolution {
    pub p_g: Vec<f64>,
    pub theta: Vec<f64>,
    pub flows: Vec<f64>,
    pub objective: f64,
}

impl OpfSolution {
    /// Build a solution from dispatch and angles, deriving flows and cost.
    pub fn from_dispatch(case: &NetworkCase, p_g: Vec<f64>, theta: Vec<f64>) -> Self {
        let flows = branch_flows(case, &theta);
        let objective = dispatch_cost(case, &p_g);
        Self {
            p_g,
            theta,
            flows,
            objective,
        }
    }

    /// Proxy regression target `y = [p_g, θ]`.
    pub fn target(&self) -> Vec<f64> {
        self.p_g.iter().chain(&self.theta).copied().collect()
    }

    /// Largest violation over balance, flow definition, bounds and objective.
    pub fn max_violation(&self, case: &NetworkCase, demand: &DemandVector) -> f64 {
        let mut worst: f64 = 0.0;
        let mut injection = vec![0.0; case.buses().len()];
        for (g, p) in case.generators().iter().zip(&self.p_g) {
            injection[case.bus_position(g.bus).unwrap()] += p;
            worst = worst.max(g.pmin - p).max(p - g.pmax);
        }
        for (&bus, d) in case.load_buses().iter().zip(demand.values()) {
            injection[bus] -= d;
        }
        for (k, e) in case.branches().iter().enumerate() {
            let (i, j) = (
                case.bus_position(e.from).unwrap(),
                case.bus_position(e.to).unwrap(),
            );
            let f = self.flows[k];
            injection[i] -= f;
            injection[j] += f;
            let diff = self.theta[i] - self.theta[j];
            worst = worst.max((f - case.flow_factor(k) * diff).abs());
            worst = worst.max(f.abs() - e.rate);
            worst = worst.max(e.angmin - diff).max(diff - e.angmax);
        }
        for r in injection {
            worst = worst.max(r.abs());
        }
        worst = worst.max(self.theta[case.ref_bus()].abs());
        worst.max((self.objective - dispatch_cost(case, &self.p_g)).abs())
    }
}

pub fn dispatch_cost(case: &NetworkCase, p_g: &[f64]) -> f64 {
    case.generators().iter().zip(p_g).map(|(g, p)| g.cost * p).sum()
}

pub fn branch_flows(case: &NetworkCase, theta: &[f64]) -> Vec<f64> {
    case.branches()
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let i = case.bus_position(e.from).unwrap();
            let j = case.bus_position(e.to).unwrap();
            case.flow_factor(k) * (theta[i] - theta[j])
        })
        .collect()
}

/// Optimality evidence from the simplex multipliers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub duality_gap: f64,
    pub complementarity: f64,
    pub primal_residual: f64,
}

/// Assemble the DC-OPF LP for `demand`.
pub fn build_dcopf_lp(case: &NetworkCase, demand: &DemandVector) -> Result<LinearProgram, OpfError> {
    case.check_demand(demand)?;
    let (ng, nb, ne) = (
        case.generators().len(),
        case.buses().len(),
        case.branches().len(),
    );
    let (theta0, flow0) = (ng, ng + nb);
    let mut lp = LinearProgram::new(ng + nb + ne, nb + ne);

    for (g, gen) in case.generators().iter().enumerate() {
        lp.cost[g] = gen.cost;
        lp.lower[g] = gen.pmin;
        lp.upper[g] = gen.pmax;
        lp.add_coeff(case.bus_position(gen.bus).unwrap(), g, 1.0);
    }
    for i in 0..nb {
        let (l, u) = if i == case.ref_bus() {
            (0.0, 0.0)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        lp.lower[theta0 + i] = l;
        lp.upper[theta0 + i] = u;
    }
    for (&bus, d) in case.load_buses().iter().zip(demand.values()) {
        lp.rhs[bus] = *d;
    }
    for (k, e) in case.branches().iter().enumerate() {
        let (i, j) = (
            case.bus_position(e.from).unwrap(),
            case.bus_position(e.to).unwrap(),
        );
        let col = flow0 + k;
        lp.add_coeff(i, col, -1.0);
        lp.add_coeff(j, col, 1.0);
        let factor = case.flow_factor(k);
        let row = nb + k;
        lp.set_coeff(row, col, 1.0);
        lp.add_coeff(row, theta0 + i, -factor);
        lp.add_coeff(row, theta0 + j, factor);
        let (a, b) = (factor * e.angmin, factor * e.angmax);
        let (alo, ahi) = if a <= b { (a, b) } else { (b, a) };
        let lo = alo.max(-e.rate);
        let hi = ahi.min(e.rate);
        if lo > hi {
            return Err(OpfError::Infeasible { residual: lo - hi });
        }
        lp.lower[col] = lo;
        lp.upper[col] = hi;
    }
    Ok(lp)
}

/// Cost-minimizing dispatch for `demand`.
pub fn solve_dcopf(case: &NetworkCase, demand: &DemandVector) -> Result<OpfSolution, OpfError> {
    solve_dcopf_certified(case, demand).map(|(s, _)| s)
}

pub fn solve_dcopf_certified(
    case: &NetworkCase,
    demand: &DemandVector,
) -> Result<(OpfSolution, Certificate), OpfError> {
    let lp = build_dcopf_lp(case, demand)?;
    let sol = match lp::solve(&lp) {
        Ok(s) => s,
        Err(LpError::Infeasible { residual }) => return Err(OpfError::Infeasible { residual }),
        Err(e @ LpError::Unbounded { .. }) => {
            // Every column is bounded once θ_ref is pinned; this is a solver bug.
            return Err(OpfError::Internal(e.to_string()));
        }
        Err(e) => return Err(OpfError::Internal(e.to_string())),
    };
    let (ng, nb) = (case.generators().len(), case.buses().len());
    let solution = OpfSolution {
        p_g: sol.x[..ng].to_vec(),
        theta: sol.x[ng..ng + nb].to_vec(),
        flows: sol.x[ng + nb..].to_vec(),
        objective: sol.objective,
    };
    let cert = Certificate {
        duality_gap: sol.duality_gap(&lp),
        complementarity: sol.complementarity_residual(&lp),
        primal_residual: lp.equality_residual(&sol.x).max(lp.bound_violation(&sol.x)),
    };
    Ok((solution, cert))
}
