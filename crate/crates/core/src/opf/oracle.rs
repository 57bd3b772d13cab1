//! Labeling oracles: the in-process DC solver and a file-exchange adapter for an
//! external solver process.
//!
//! Exchange protocol (one batch):
//!
//! 1. `req_<batch>.json` is written atomically into the exchange directory:
//!    `{"case_ref": "...", "instances": [{"index": 0, "demand": [..]}, ..]}`
//! 2. The external solver writes `resp_<batch>.json` (atomically, e.g. via rename):
//!    `{"instances": [{"index": 0, "p_g": [..], "theta": [..], "objective": 1.0,
//!    "active_bits": [0, 1, ..]}, ..]}`
//!
//! Responses are matched back to requests by `index`, not by position.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{extract_active_set, solve_dcopf, ActiveSet, DemandVector, NetworkCase, OpfError, OpfSolution};

pub type Labeled = (OpfSolution, ActiveSet);

/// Anything that can turn demands into solved, active-set-annotated instances.
///
/// The outer `Result` fails the whole batch (oracle unreachable); the inner one
/// reports per-instance failures such as infeasibility.
pub trait LabelOracle {
    fn label_batch(
        &mut self,
        case: &NetworkCase,
        demands: &[DemandVector],
    ) -> Result<Vec<Result<Labeled, OpfError>>, OpfError>;
}

/// In-process DC-OPF labeling.
#[derive(Debug, Clone, Copy)]
pub struct DcOracle {
    pub eps_active: f64,
}

impl Default for DcOracle {
    fn default() -> Self {
        Self {
            eps_active: super::EPS_ACTIVE,
        }
    }
}

impl DcOracle {
    pub fn label(&self, case: &NetworkCase, demand: &DemandVector) -> Result<Labeled, OpfError> {
        let sol = solve_dcopf(case, demand)?;
        let active = extract_active_set(case, &sol, self.eps_active);
        Ok((sol, active))
    }
}

impl LabelOracle for DcOracle {
    fn label_batch(
        &mut self,
        case: &NetworkCase,
        demands: &[DemandVector],
    ) -> Result<Vec<Result<Labeled, OpfError>>, OpfError> {
        Ok(demands.iter().map(|d| self.label(case, d)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestInstance {
    pub index: usize,
    pub demand: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRequest {
    pub case_ref: String,
    pub instances: Vec<RequestInstance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseInstance {
    pub index: usize,
    pub p_g: Vec<f64>,
    pub theta: Vec<f64>,
    pub objective: f64,
    pub active_bits: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResponse {
    pub instances: Vec<ResponseInstance>,
}

pub fn request_path(dir: &Path, batch: &str) -> PathBuf {
    dir.join(format!("req_{batch}.json"))
}

pub fn response_path(dir: &Path, batch: &str) -> PathBuf {
    dir.join(format!("resp_{batch}.json"))
}

/// Write `contents` to `path` via a sibling temp file and rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

/// File-exchange adapter for an out-of-process solver.
#[derive(Debug, Clone)]
pub struct ExternalOracle {
    exchange_dir: PathBuf,
    case_ref: String,
    pub timeout: Duration,
    pub poll_interval: Duration,
    next_batch: u64,
}

impl ExternalOracle {
    pub fn new(exchange_dir: impl Into<PathBuf>, case_ref: impl Into<String>) -> Self {
        let exchange_dir = exchange_dir.into();
        // Continue numbering past any requests already in the directory.
        let next_batch = fs::read_dir(&exchange_dir)
            .into_iter()
            .flatten()
            .flatten()
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                name.strip_prefix("req_")?.strip_suffix(".json")?.parse::<u64>().ok()
            })
            .map(|n| n + 1)
            .max()
            .unwrap_or(0);
        Self {
            exchange_dir,
            case_ref: case_ref.into(),
            timeout: Duration::from_secs(600),
            poll_interval: Duration::from_millis(20),
            next_batch,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn exchange_dir(&self) -> &Path {
        &self.exchange_dir
    }

    fn lock(&self, deadline: Instant) -> Result<LockGuard, OpfError> {
        let path = self.exchange_dir.join(".oracle.lock");
        loop {
            match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(_) => return Ok(LockGuard(path)),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    if Instant::now() >= deadline {
                        return Err(OpfError::OracleUnavailable(format!(
                            "exchange directory {} is locked",
                            self.exchange_dir.display()
                        )));
                    }
                    thread::sleep(self.poll_interval);
                }
                Err(e) => return Err(OpfError::Io(format!("{}: {e}", path.display()))),
            }
        }
    }
}

struct LockGuard(PathBuf);

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

impl LabelOracle for ExternalOracle {
    fn label_batch(
        &mut self,
        case: &NetworkCase,
        demands: &[DemandVector],
    ) -> Result<Vec<Result<Labeled, OpfError>>, OpfError> {
        if demands.is_empty() {
            return Ok(Vec::new());
        }
        for d in demands {
            case.check_demand(d)?;
        }
        let deadline = Instant::now() + self.timeout;
        let _guard = self.lock(deadline)?;
        let batch = format!("{:06}", self.next_batch);
        self.next_batch += 1;

        let request = OracleRequest {
            case_ref: self.case_ref.clone(),
            instances: demands
                .iter()
                .enumerate()
                .map(|(index, d)| RequestInstance {
                    index,
                    demand: d.values().to_vec(),
                })
                .collect(),
        };
        let req_path = request_path(&self.exchange_dir, &batch);
        let body = serde_json::to_vec_pretty(&request).expect("request serializes");
        write_atomic(&req_path, &body).map_err(|e| OpfError::Io(format!("{}: {e}", req_path.display())))?;

        let resp_path = response_path(&self.exchange_dir, &batch);
        let response = loop {
            if let Ok(text) = fs::read_to_string(&resp_path) {
                match serde_json::from_str::<OracleResponse>(&text) {
                    Ok(r) => break r,
                    // A truncated file may still be in flight; keep polling.
                    Err(e) if e.is_eof() && Instant::now() < deadline => {}
                    Err(e) => {
                        return Err(OpfError::ResponseParse {
                            line: e.line(),
                            message: e.to_string(),
                        })
                    }
                }
            }
            if Instant::now() >= deadline {
                return Err(OpfError::OracleUnavailable(format!(
                    "no response at {} within {:?}",
                    resp_path.display(),
                    self.timeout
                )));
            }
            thread::sleep(self.poll_interval);
        };
        decode_response(case, demands.len(), response)
    }
}

fn decode_response(
    case: &NetworkCase,
    expected: usize,
    response: OracleResponse,
) -> Result<Vec<Result<Labeled, OpfError>>, OpfError> {
    let (ng, nb, k) = (
        case.generators().len(),
        case.buses().len(),
        case.num_constraints(),
    );
    let mut by_index = BTreeMap::new();
    for inst in response.instances {
        let bad = |what: String| OpfError::ResponseParse {
            line: 0,
            message: format!("instance {}: {what}", inst.index),
        };
        if inst.index >= expected {
            return Err(bad(format!("index out of range (batch has {expected})")));
        }
        if inst.p_g.len() != ng || inst.theta.len() != nb || inst.active_bits.len() != k {
            return Err(bad(format!(
                "expected {ng} p_g, {nb} theta, {k} active_bits; got {}, {}, {}",
                inst.p_g.len(),
                inst.theta.len(),
                inst.active_bits.len()
            )));
        }
        if inst.active_bits.iter().any(|&b| b > 1) {
            return Err(bad("active_bits entries must be 0 or 1".into()));
        }
        let index = inst.index;
        let mut sol = OpfSolution::from_dispatch(case, inst.p_g, inst.theta);
        sol.objective = inst.objective;
        if by_index.insert(index, (sol, ActiveSet::from_bits(inst.active_bits))).is_some() {
            return Err(OpfError::ResponseParse {
                line: 0,
                message: format!("instance {index}: duplicate index"),
            });
        }
    }
    Ok((0..expected)
        .map(|i| {
            by_index
                .remove(&i)
                .ok_or(OpfError::MissingResponse { index: i })
        })
        .collect())
}
