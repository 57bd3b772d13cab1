//! Network data, the DC-OPF labeling oracle, and active-set extraction.

mod active_set;
mod case;
pub mod cases;
mod dcopf;
mod oracle;

use thiserror::Error;

pub use active_set::{
    describe_constraint, extract_active_set, ActiveSet, ConstraintKind, ConstraintLayout, EPS_ACTIVE,
};
pub use case::{Branch, Bus, DemandVector, Generator, NetworkCase};
pub use dcopf::{
    branch_flows, build_dcopf_lp, dispatch_cost, solve_dcopf, solve_dcopf_certified, Certificate,
    OpfSolution, EPS_CS, EPS_FEAS,
};
pub use oracle::{
    request_path, response_path, write_atomic, DcOracle, ExternalOracle, LabelOracle, Labeled,
    OracleRequest, OracleResponse, RequestInstance, ResponseInstance,
};

#[derive(Debug, Error)]
pub enum OpfError {
    #[error("case parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid case: {0}")]
    InvalidCase(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("demand has {got} entries, case has {expected} load buses")]
    DemandDimension { expected: usize, got: usize },
    #[error("invalid demand: {0}")]
    InvalidDemand(String),
    #[error("DC-OPF infeasible (phase-1 residual {residual:.6e} MW)")]
    Infeasible { residual: f64 },
    #[error("internal solver error: {0}")]
    Internal(String),
    #[error("labeling oracle unavailable: {0}")]
    OracleUnavailable(String),
    #[error("malformed oracle response (line {line}): {message}")]
    ResponseParse { line: usize, message: String },
    #[error("oracle response has no entry for instance {index}")]
    MissingResponse { index: usize },
}
