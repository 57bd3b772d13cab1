//! CSV persistence for datasets.
//!
//! `labeled.csv`: `index, regime, x_0.., pg_0.., theta_0.., objective, a_0..`
//! `unlabeled.csv`: `index, regime, x_0..`

use std::path::Path;

use super::{DataError, LabeledInstance, UnlabeledInstance};
use crate::opf::{ActiveSet, DemandVector, NetworkCase, OpfSolution};

fn labeled_header(case: &NetworkCase) -> Vec<String> {
    let mut h = vec!["index".to_string(), "regime".to_string()];
    h.extend((0..case.num_loads()).map(|i| format!("x_{i}")));
    h.extend((0..case.generators().len()).map(|i| format!("pg_{i}")));
    h.extend((0..case.buses().len()).map(|i| format!("theta_{i}")));
    h.push("objective".into());
    h.extend((0..case.num_constraints()).map(|i| format!("a_{i}")));
    h
}

fn unlabeled_header(case: &NetworkCase) -> Vec<String> {
    let mut h = vec!["index".to_string(), "regime".to_string()];
    h.extend((0..case.num_loads()).map(|i| format!("x_{i}")));
    h
}

pub fn write_labeled(
    path: impl AsRef<Path>,
    case: &NetworkCase,
    instances: &[LabeledInstance],
) -> Result<(), DataError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(labeled_header(case))?;
    for inst in instances {
        let mut row = vec![inst.index.to_string(), inst.regime.clone()];
        row.extend(inst.x.values().iter().map(f64::to_string));
        row.extend(inst.y.p_g.iter().map(f64::to_string));
        row.extend(inst.y.theta.iter().map(f64::to_string));
        row.push(inst.y.objective.to_string());
        row.extend(inst.a.bits().iter().map(u8::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_unlabeled<'a>(
    path: impl AsRef<Path>,
    case: &NetworkCase,
    instances: impl IntoIterator<Item = &'a UnlabeledInstance>,
) -> Result<(), DataError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(unlabeled_header(case))?;
    for inst in instances {
        let mut row = vec![inst.index.to_string(), inst.regime.clone()];
        row.extend(inst.x.values().iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn check_header(rdr: &mut csv::Reader<std::fs::File>, expected: &[String]) -> Result<(), DataError> {
    let got: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if got != expected {
        return Err(DataError::Format(format!(
            "header mismatch: expected {} columns starting {:?}, got {:?}",
            expected.len(),
            &expected[..expected.len().min(3)],
            &got[..got.len().min(3)]
        )));
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(field: &str, line: usize) -> Result<T, DataError> {
    field
        .parse()
        .map_err(|_| DataError::Format(format!("line {line}: cannot parse `{field}`")))
}

pub fn read_labeled(path: impl AsRef<Path>, case: &NetworkCase) -> Result<Vec<LabeledInstance>, DataError> {
    let mut rdr = csv::Reader::from_path(path)?;
    check_header(&mut rdr, &labeled_header(case))?;
    let (m, g, n, k) = (
        case.num_loads(),
        case.generators().len(),
        case.buses().len(),
        case.num_constraints(),
    );
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let nums = |from: usize, len: usize| -> Result<Vec<f64>, DataError> {
            (from..from + len).map(|c| parse(&rec[c], line)).collect()
        };
        let x = nums(2, m)?;
        let p_g = nums(2 + m, g)?;
        let theta = nums(2 + m + g, n)?;
        let objective = parse(&rec[2 + m + g + n], line)?;
        let bits: Vec<u8> = (0..k)
            .map(|c| parse::<u8>(&rec[3 + m + g + n + c], line))
            .collect::<Result<_, _>>()?;
        if bits.iter().any(|&b| b > 1) {
            return Err(DataError::Format(format!("line {line}: active bits must be 0/1")));
        }
        let mut y = OpfSolution::from_dispatch(case, p_g, theta);
        y.objective = objective;
        out.push(LabeledInstance {
            index: parse(&rec[0], line)?,
            regime: rec[1].to_string(),
            x: DemandVector(x),
            y,
            a: ActiveSet::from_bits(bits),
        });
    }
    Ok(out)
}

pub fn read_unlabeled(path: impl AsRef<Path>, case: &NetworkCase) -> Result<Vec<UnlabeledInstance>, DataError> {
    let mut rdr = csv::Reader::from_path(path)?;
    check_header(&mut rdr, &unlabeled_header(case))?;
    let m = case.num_loads();
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let x = (2..2 + m).map(|c| parse(&rec[c], line)).collect::<Result<Vec<f64>, _>>()?;
        out.push(UnlabeledInstance {
            index: parse(&rec[0], line)?,
            regime: rec[1].to_string(),
            x: DemandVector(x),
        });
    }
    Ok(out)
}
