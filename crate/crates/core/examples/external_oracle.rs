//! Label a batch through the file-exchange oracle. A thread plays the external
//! solver: it waits for the request file, solves every instance and writes the
//! response atomically.
//!
//!     cargo run --example external_oracle

use std::path::PathBuf;
use std::thread;
use std::time::Duration;

use opf_al::opf::{
    cases, extract_active_set, request_path, response_path, solve_dcopf, write_atomic, DemandVector, ExternalOracle,
    LabelOracle, OracleRequest, OracleResponse, ResponseInstance, EPS_ACTIVE,
};

fn serve_one(dir: PathBuf, batch: &str) -> anyhow::Result<()> {
    let case = cases::three_bus();
    let req = request_path(&dir, batch);
    let text = loop {
        match std::fs::read_to_string(&req) {
            Ok(t) => break t,
            Err(_) => thread::sleep(Duration::from_millis(10)),
        }
    };
    let request: OracleRequest = serde_json::from_str(&text)?;
    let mut instances = Vec::new();
    for inst in request.instances {
        let sol = solve_dcopf(&case, &DemandVector(inst.demand))?;
        let active = extract_active_set(&case, &sol, EPS_ACTIVE);
        instances.push(ResponseInstance {
            index: inst.index,
            p_g: sol.p_g,
            theta: sol.theta,
            objective: sol.objective,
            active_bits: active.bits().to_vec(),
        });
    }
    write_atomic(&response_path(&dir, batch), &serde_json::to_vec(&OracleResponse { instances })?)?;
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let dir = std::env::temp_dir().join(format!("opf-al-exchange-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let server = {
        let dir = dir.clone();
        thread::spawn(move || serve_one(dir, "000000"))
    };
    let case = cases::three_bus();
    let mut oracle = ExternalOracle::new(&dir, "three_bus").with_timeout(Duration::from_secs(10));
    let demands: Vec<DemandVector> = [20.0, 60.0, 110.0].iter().map(|d| DemandVector(vec![*d])).collect();
    for (d, result) in demands.iter().zip(oracle.label_batch(&case, &demands)?) {
        let (sol, active) = result?;
        println!("demand {:>6.1}: cost {:>8.2}, {} active constraint(s)", d.values()[0], sol.objective, active.count_active());
    }
    server.join().expect("solver thread")?;
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
