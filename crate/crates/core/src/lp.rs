//! Dense bounded-variable primal simplex.
//!
//! Solves `min cᵀx  s.t.  A x = b,  l ≤ x ≤ u` where bounds may be infinite.
//! Nonbasic variables rest at a finite bound (or at zero when free), so box
//! constraints never need explicit rows. Phase 1 minimizes the sum of one
//! artificial per row; phase 2 pins those artificials to zero and optimizes the
//! true cost. Pricing is Dantzig's rule, switching to Bland's rule for as long
//! as pivots stay degenerate.
//!
//! The artificial block of the tableau is `B⁻¹` up to row signs, which gives the
//! dual multipliers at termination without a separate factorization.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    /// Phase 1 stopped with a positive sum of artificials.
    #[error("linear program is infeasible (phase-1 residual {residual:.6e})")]
    Infeasible { residual: f64 },
    #[error("linear program is unbounded (entering column {column})")]
    Unbounded { column: usize },
    #[error("simplex hit the pivot limit ({0})")]
    IterationLimit(usize),
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

/// Dense LP in equality form with variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    /// Row-major `rows × cost.len()` constraint matrix.
    pub matrix: Vec<f64>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    pub fn new(num_vars: usize, num_rows: usize) -> Self {
        Self {
            cost: vec![0.0; num_vars],
            matrix: vec![0.0; num_vars * num_rows],
            rhs: vec![0.0; num_rows],
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn coeff(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.num_vars() + col]
    }

    pub fn set_coeff(&mut self, row: usize, col: usize, value: f64) {
        let n = self.num_vars();
        self.matrix[row * n + col] = value;
    }

    pub fn add_coeff(&mut self, row: usize, col: usize, value: f64) {
        let n = self.num_vars();
        self.matrix[row * n + col] += value;
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest absolute residual of `A x = b`.
    pub fn equality_residual(&self, x: &[f64]) -> f64 {
        let n = self.num_vars();
        (0..self.num_rows())
            .map(|i| {
                let ax: f64 = self.matrix[i * n..(i + 1) * n]
                    .iter()
                    .zip(x)
                    .map(|(a, v)| a * v)
                    .sum();
                (ax - self.rhs[i]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest violation of the variable bounds.
    pub fn bound_violation(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| (l - v).max(v - u).max(0.0))
            .fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<(), LpError> {
        let (m, n) = (self.num_rows(), self.num_vars());
        if self.matrix.len() != m * n || self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Malformed("dimension mismatch".into()));
        }
        for j in 0..n {
            if !(self.lower[j] <= self.upper[j]) || self.lower[j] == f64::INFINITY {
                return Err(LpError::Malformed(format!("bad bounds on variable {j}")));
            }
            if !self.cost[j].is_finite() {
                return Err(LpError::Malformed(format!("non-finite cost on variable {j}")));
            }
        }
        if self.matrix.iter().chain(&self.rhs).any(|v| !v.is_finite()) {
            return Err(LpError::Malformed("non-finite matrix or rhs entry".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_pivots: usize,
    /// Phase-1 objective above this (scaled by `1 + ‖b‖∞`) means infeasible.
    pub feasibility_tol: f64,
    /// Reduced-cost threshold for an improving column.
    pub optimality_tol: f64,
    /// Smallest tableau entry accepted as a pivot.
    pub pivot_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_pivots: 20_000,
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Free nonbasic variable resting at zero.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row multipliers `y = c_Bᵀ B⁻¹`.
    pub duals: Vec<f64>,
    /// `d = c − Aᵀ y` for the structural columns.
    pub reduced_costs: Vec<f64>,
    pub status: Vec<VarStatus>,
    pub pivots: usize,
}

impl LpSolution {
    /// `bᵀy + Σ max(d,0)·l + min(d,0)·u`; infinite when the reduced costs point at an
    /// infinite bound.
    pub fn dual_objective(&self, lp: &LinearProgram) -> f64 {
        let mut obj: f64 = lp.rhs.iter().zip(&self.duals).map(|(b, y)| b * y).sum();
        for j in 0..lp.num_vars() {
            let d = self.significant_reduced_cost(lp, j);
            if d > 0.0 {
                obj += d * lp.lower[j];
            } else if d < 0.0 {
                obj += d * lp.upper[j];
            }
        }
        obj
    }

    /// Reduced cost of column `j`, zeroed when it is below rounding noise relative
    /// to the magnitudes that produced it.
    fn significant_reduced_cost(&self, lp: &LinearProgram, j: usize) -> f64 {
        let scale: f64 = lp.cost[j].abs()
            + (0..lp.num_rows())
                .map(|i| (self.duals[i] * lp.coeff(i, j)).abs())
                .sum::<f64>();
        let d = self.reduced_costs[j];
        if d.abs() <= 1e-10 * (1.0 + scale) {
            0.0
        } else {
            d
        }
    }

    pub fn duality_gap(&self, lp: &LinearProgram) -> f64 {
        (lp.objective(&self.x) - self.dual_objective(lp)).abs()
    }

    /// Largest `|d_j| · slack_j` where the slack is measured to the bound the sign of
    /// `d_j` says should be tight.
    pub fn complementarity_residual(&self, lp: &LinearProgram) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..lp.num_vars() {
            let d = self.significant_reduced_cost(lp, j);
            let x = self.x[j];
            let r = if d > 0.0 {
                d * (x - lp.lower[j])
            } else if d < 0.0 {
                -d * (lp.upper[j] - x)
            } else {
                0.0
            };
            let r = if r.is_nan() { 0.0 } else { r };
            worst = worst.max(r);
        }
        worst
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_with(lp, &SimplexOptions::default())
}

pub fn solve_with(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let mut tab = Tableau::new(lp);
    let scale = 1.0 + lp.rhs.iter().fold(0.0_f64, |a, b| a.max(b.abs()));

    let phase1: Vec<f64> = (0..tab.total).map(|j| if j >= tab.n { 1.0 } else { 0.0 }).collect();
    tab.optimize(&phase1, opts)?;
    let residual: f64 = (tab.n..tab.total).map(|j| tab.x[j]).sum();
    if residual > opts.feasibility_tol * scale {
        return Err(LpError::Infeasible { residual });
    }

    for j in tab.n..tab.total {
        tab.upper[j] = 0.0;
        if tab.status[j] != VarStatus::Basic {
            tab.x[j] = 0.0;
            tab.status[j] = VarStatus::AtLower;
        }
    }
    let mut phase2 = lp.cost.clone();
    phase2.resize(tab.total, 0.0);
    tab.optimize(&phase2, opts)?;
    Ok(tab.finish(lp, &phase2))
}

struct Tableau {
    m: usize,
    n: usize,
    total: usize,
    /// `B⁻¹ [A | S]`, row-major `m × total`.
    t: Vec<f64>,
    basis: Vec<usize>,
    x: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    status: Vec<VarStatus>,
    /// Sign of each artificial column.
    signs: Vec<f64>,
    pivots: usize,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let (m, n) = (lp.num_rows(), lp.num_vars());
        let total = n + m;
        let mut x = vec![0.0; total];
        let mut status = vec![VarStatus::Basic; total];
        for j in 0..n {
            let (l, u) = (lp.lower[j], lp.upper[j]);
            if l.is_finite() {
                x[j] = l;
                status[j] = VarStatus::AtLower;
            } else if u.is_finite() {
                x[j] = u;
                status[j] = VarStatus::AtUpper;
            } else {
                status[j] = VarStatus::Zero;
            }
        }
        let mut signs = vec![1.0; m];
        let mut t = vec![0.0; m * total];
        for i in 0..m {
            let r = lp.rhs[i] - (0..n).map(|j| lp.coeff(i, j) * x[j]).sum::<f64>();
            let s = if r >= 0.0 { 1.0 } else { -1.0 };
            signs[i] = s;
            x[n + i] = r.abs();
            for j in 0..n {
                t[i * total + j] = s * lp.coeff(i, j);
            }
            t[i * total + n + i] = 1.0;
        }
        let mut lower = lp.lower.clone();
        lower.resize(total, 0.0);
        let mut upper = lp.upper.clone();
        upper.resize(total, f64::INFINITY);
        Self {
            m,
            n,
            total,
            t,
            basis: (n..total).collect(),
            x,
            lower,
            upper,
            status,
            signs,
            pivots: 0,
        }
    }

    fn col(&self, row: usize, j: usize) -> f64 {
        self.t[row * self.total + j]
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                let row = &self.t[i * self.total..(i + 1) * self.total];
                for (dj, a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    /// Improving direction for nonbasic `j`, if any.
    fn direction(&self, j: usize, dj: f64, tol: f64) -> Option<f64> {
        if self.upper[j] - self.lower[j] <= 0.0 {
            return None;
        }
        match self.status[j] {
            VarStatus::Basic => None,
            VarStatus::AtLower if dj < -tol => Some(1.0),
            VarStatus::AtUpper if dj > tol => Some(-1.0),
            VarStatus::Zero if dj.abs() > tol => Some(-dj.signum()),
            _ => None,
        }
    }

    fn optimize(&mut self, cost: &[f64], opts: &SimplexOptions) -> Result<(), LpError> {
        let mut bland = false;
        loop {
            if self.pivots >= opts.max_pivots {
                return Err(LpError::IterationLimit(self.pivots));
            }
            let d = self.reduced_costs(cost);
            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..self.total {
                if let Some(dir) = self.direction(j, d[j], opts.optimality_tol) {
                    if bland {
                        entering = Some((j, dir));
                        break;
                    }
                    if d[j].abs() > best {
                        best = d[j].abs();
                        entering = Some((j, dir));
                    }
                }
            }
            let Some((j, dir)) = entering else {
                return Ok(());
            };

            // Ratio test over basic rows plus the entering variable's own range.
            let mut step = self.upper[j] - self.lower[j];
            let mut leave: Option<usize> = None;
            let mut leave_alpha = 0.0;
            for i in 0..self.m {
                let alpha = dir * self.col(i, j);
                let b = self.basis[i];
                let limit = if alpha > opts.pivot_tol {
                    (self.x[b] - self.lower[b]) / alpha
                } else if alpha < -opts.pivot_tol {
                    (self.upper[b] - self.x[b]) / -alpha
                } else {
                    continue;
                };
                if !limit.is_finite() {
                    continue;
                }
                let limit = limit.max(0.0);
                // Ties with a pure bound flip keep the flip; ties between rows go to
                // the lowest basic index (Bland) or the largest pivot magnitude.
                let better = if limit < step - 1e-12 {
                    true
                } else if let (Some(r), true) = (leave, limit <= step + 1e-12) {
                    if bland {
                        b < self.basis[r]
                    } else {
                        alpha.abs() > leave_alpha
                    }
                } else {
                    false
                };
                if better {
                    step = limit;
                    leave = Some(i);
                    leave_alpha = alpha.abs();
                }
            }
            if !step.is_finite() {
                return Err(LpError::Unbounded { column: j });
            }

            for i in 0..self.m {
                let b = self.basis[i];
                self.x[b] -= dir * step * self.col(i, j);
            }
            self.x[j] += dir * step;
            self.pivots += 1;
            bland = step <= 1e-12;

            match leave {
                None => {
                    // Bound flip: the entering variable crosses its whole range.
                    if dir > 0.0 {
                        self.x[j] = self.upper[j];
                        self.status[j] = VarStatus::AtUpper;
                    } else {
                        self.x[j] = self.lower[j];
                        self.status[j] = VarStatus::AtLower;
                    }
                }
                Some(r) => {
                    let b = self.basis[r];
                    let alpha = dir * self.col(r, j);
                    if alpha > 0.0 {
                        self.x[b] = self.lower[b];
                        self.status[b] = VarStatus::AtLower;
                    } else {
                        self.x[b] = self.upper[b];
                        self.status[b] = VarStatus::AtUpper;
                    }
                    self.pivot(r, j);
                    self.basis[r] = j;
                    self.status[j] = VarStatus::Basic;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.total;
        let p = self.t[r * w + j];
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + j];
            if f == 0.0 {
                continue;
            }
            for (v, pr) in self.t[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
            self.t[i * w + j] = 0.0;
        }
    }

    /// `B⁻¹ e_i` is column `n + i` of the tableau scaled by the artificial's sign.
    fn binv(&self, row: usize, i: usize) -> f64 {
        self.signs[i] * self.col(row, self.n + i)
    }

    fn finish(mut self, lp: &LinearProgram, cost: &[f64]) -> LpSolution {
        let (m, n) = (self.m, self.n);
        // Recompute basic values from the nonbasic ones to shed accumulated drift.
        let mut rhs = lp.rhs.clone();
        for j in 0..n {
            if self.status[j] != VarStatus::Basic && self.x[j] != 0.0 {
                for (i, r) in rhs.iter_mut().enumerate() {
                    *r -= lp.coeff(i, j) * self.x[j];
                }
            }
        }
        for r in 0..m {
            let v: f64 = (0..m).map(|i| self.binv(r, i) * rhs[i]).sum();
            self.x[self.basis[r]] = v;
        }

        let duals: Vec<f64> = (0..m)
            .map(|i| (0..m).map(|r| cost[self.basis[r]] * self.binv(r, i)).sum())
            .collect();
        let reduced_costs: Vec<f64> = (0..n)
            .map(|j| lp.cost[j] - (0..m).map(|i| duals[i] * lp.coeff(i, j)).sum::<f64>())
            .collect();
        let x: Vec<f64> = self.x[..n].to_vec();
        LpSolution {
            objective: lp.objective(&x),
            x,
            duals,
            reduced_costs,
            status: self.status[..n].to_vec(),
            pivots: self.pivots,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn bounded_single_row() {
        // min x0 + 3 x1, x0 + x1 = 5, x0 ≤ 4
        let mut lp = LinearProgram::new(2, 1);
        lp.cost = vec![1.0, 3.0];
        lp.matrix = vec![1.0, 1.0];
        lp.rhs = vec![5.0];
        lp.upper[0] = 4.0;
        let s = solve(&lp).unwrap();
        assert_close(s.x[0], 4.0);
        assert_close(s.x[1], 1.0);
        assert_close(s.objective, 7.0);
        assert_close(s.duals[0], 3.0);
        assert!(s.duality_gap(&lp) < 1e-9);
    }

    #[test]
    fn free_variable_and_negative_rhs() {
        // min -x0, x0 - x1 = -2, x1 ∈ [0, 3], x0 free
        let mut lp = LinearProgram::new(2, 1);
        lp.cost = vec![-1.0, 0.0];
        lp.matrix = vec![1.0, -1.0];
        lp.rhs = vec![-2.0];
        lp.lower[0] = f64::NEG_INFINITY;
        lp.upper[1] = 3.0;
        let s = solve(&lp).unwrap();
        assert_close(s.x[0], 1.0);
        assert_close(s.x[1], 3.0);
    }

    #[test]
    fn infeasible_reports_residual() {
        let mut lp = LinearProgram::new(1, 1);
        lp.matrix = vec![1.0];
        lp.rhs = vec![10.0];
        lp.upper[0] = 4.0;
        match solve(&lp) {
            Err(LpError::Infeasible { residual }) => assert_close(residual, 6.0),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn unbounded_is_detected() {
        let mut lp = LinearProgram::new(2, 1);
        lp.cost = vec![-1.0, 0.0];
        lp.matrix = vec![1.0, -1.0];
        lp.rhs = vec![0.0];
        assert!(matches!(solve(&lp), Err(LpError::Unbounded { .. })));
    }

    #[test]
    fn rejects_crossed_bounds() {
        let mut lp = LinearProgram::new(1, 0);
        lp.lower[0] = 2.0;
        lp.upper[0] = 1.0;
        assert!(matches!(solve(&lp), Err(LpError::Malformed(_))));
    }

    #[test]
    fn degenerate_klee_minty_like_terminates() {
        // Highly degenerate: many rows tight at the origin.
        let k = 6;
        let mut lp = LinearProgram::new(2 * k, k);
        for i in 0..k {
            lp.cost[i] = -((i + 1) as f64);
            for j in 0..=i {
                lp.set_coeff(i, j, 1.0);
            }
            lp.set_coeff(i, k + i, 1.0);
            lp.rhs[i] = 0.0;
        }
        for i in 0..k {
            lp.upper[i] = 1.0;
        }
        let s = solve(&lp).unwrap();
        assert_close(s.objective, 0.0);
    }
}
