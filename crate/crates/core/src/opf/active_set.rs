//! Binding-constraint indicators for an OPF solution.
//!
//! Bit layout for a case with `G` generators and `E` branches (`K = 2G + 4E`):
//!
//! ```text
//! [ p_g ≥ pmin (G) | p_g ≤ pmax (G) | f ≤ rate (E) | f ≥ −rate (E) | Δθ ≤ angmax (E) | Δθ ≥ angmin (E) ]
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{NetworkCase, OpfSolution};

/// Absolute slack below which an inequality counts as binding.
pub const EPS_ACTIVE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActiveSet {
    bits: Vec<u8>,
}

impl ActiveSet {
    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![0; len] }
    }

    /// Panics if any entry is not 0 or 1.
    pub fn from_bits(bits: Vec<u8>) -> Self {
        assert!(bits.iter().all(|&b| b <= 1), "active-set bits must be 0 or 1");
        Self { bits }
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        Self {
            bits: bits.into_iter().map(u8::from).collect(),
        }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, k: usize) -> bool {
        self.bits[k] == 1
    }

    pub fn count_active(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn hamming(&self, other: &ActiveSet) -> usize {
        debug_assert_eq!(self.len(), other.len());
        self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| f64::from(b)).collect()
    }
}

impl fmt::Display for ActiveSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// What a bit position refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    GenLower(usize),
    GenUpper(usize),
    FlowUpper(usize),
    FlowLower(usize),
    AngleUpper(usize),
    AngleLower(usize),
}

/// Bit index helpers for a case.
#[derive(Debug, Clone, Copy)]
pub struct ConstraintLayout {
    pub generators: usize,
    pub branches: usize,
}

impl ConstraintLayout {
    pub fn of(case: &NetworkCase) -> Self {
        Self {
            generators: case.generators().len(),
            branches: case.branches().len(),
        }
    }

    pub fn len(&self) -> usize {
        2 * self.generators + 4 * self.branches
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, kind: ConstraintKind) -> usize {
        let (g, e) = (self.generators, self.branches);
        match kind {
            ConstraintKind::GenLower(i) => i,
            ConstraintKind::GenUpper(i) => g + i,
            ConstraintKind::FlowUpper(k) => 2 * g + k,
            ConstraintKind::FlowLower(k) => 2 * g + e + k,
            ConstraintKind::AngleUpper(k) => 2 * g + 2 * e + k,
            ConstraintKind::AngleLower(k) => 2 * g + 3 * e + k,
        }
    }

    pub fn kind(&self, index: usize) -> ConstraintKind {
        let (g, e) = (self.generators, self.branches);
        assert!(index < self.len(), "constraint index {index} out of range");
        match index {
            i if i < g => ConstraintKind::GenLower(i),
            i if i < 2 * g => ConstraintKind::GenUpper(i - g),
            i if i < 2 * g + e => ConstraintKind::FlowUpper(i - 2 * g),
            i if i < 2 * g + 2 * e => ConstraintKind::FlowLower(i - 2 * g - e),
            i if i < 2 * g + 3 * e => ConstraintKind::AngleUpper(i - 2 * g - 2 * e),
            i => ConstraintKind::AngleLower(i - 2 * g - 3 * e),
        }
    }
}

/// Human-readable name of constraint `index`.
pub fn describe_constraint(case: &NetworkCase, index: usize) -> String {
    let layout = ConstraintLayout::of(case);
    let gen = |i: usize| format!("gen {i} (bus {})", case.generators()[i].bus);
    let br = |k: usize| {
        let e = &case.branches()[k];
        format!("branch {k} ({}->{})", e.from, e.to)
    };
    match layout.kind(index) {
        ConstraintKind::GenLower(i) => format!("{} at pmin", gen(i)),
        ConstraintKind::GenUpper(i) => format!("{} at pmax", gen(i)),
        ConstraintKind::FlowUpper(k) => format!("{} flow at +rate", br(k)),
        ConstraintKind::FlowLower(k) => format!("{} flow at -rate", br(k)),
        ConstraintKind::AngleUpper(k) => format!("{} angle difference at angmax", br(k)),
        ConstraintKind::AngleLower(k) => format!("{} angle difference at angmin", br(k)),
    }
}

/// Mark every inequality whose slack at `sol` is within `eps_active`.
///
/// Reads the solution values only, so on degenerate optima the result is whatever
/// the returned vertex makes tight.
pub fn extract_active_set(case: &NetworkCase, sol: &OpfSolution, eps_active: f64) -> ActiveSet {
    let layout = ConstraintLayout::of(case);
    let mut bits = vec![0u8; layout.len()];
    let mut mark = |kind, slack: f64| {
        if slack <= eps_active {
            bits[layout.index(kind)] = 1;
        }
    };
    for (i, (g, p)) in case.generators().iter().zip(&sol.p_g).enumerate() {
        mark(ConstraintKind::GenLower(i), p - g.pmin);
        mark(ConstraintKind::GenUpper(i), g.pmax - p);
    }
    for (k, (e, f)) in case.branches().iter().zip(&sol.flows).enumerate() {
        let i = case.bus_position(e.from).unwrap();
        let j = case.bus_position(e.to).unwrap();
        let diff = sol.theta[i] - sol.theta[j];
        mark(ConstraintKind::FlowUpper(k), e.rate - f);
        mark(ConstraintKind::FlowLower(k), f + e.rate);
        mark(ConstraintKind::AngleUpper(k), e.angmax - diff);
        mark(ConstraintKind::AngleLower(k), diff - e.angmin);
    }
    ActiveSet { bits }
}
