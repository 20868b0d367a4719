//! CSV persistence. Floats are written in Rust's shortest round-trip form so a
//! file parses back to identical records.

use std::io::{Read, Write};

use crate::engine::{CellLog, ResultRecord};
use crate::error::{HarnessError, Result};

pub const RECORD_HEADER: [&str; 8] =
    ["replication", "estimator", "budget", "estimate", "variance", "abs_error", "cost", "n_per_level"];

pub fn write_records<W: Write>(out: W, records: &[ResultRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        let counts: Vec<String> = r.n_per_level.iter().map(usize::to_string).collect();
        w.write_record([
            r.replication.to_string(),
            r.estimator.clone(),
            r.budget.to_string(),
            r.estimate.to_string(),
            r.variance.map(|v| v.to_string()).unwrap_or_default(),
            r.abs_error.to_string(),
            r.cost.to_string(),
            counts.join(";"),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::Csv(e.into()))?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<ResultRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(RECORD_HEADER) {
        return Err(HarnessError::Record { line: 1, message: format!("expected header {}", RECORD_HEADER.join(",")) });
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |field: &str, value: &str| HarnessError::Record { line, message: format!("bad {field} {value:?}") };
        let float = |i: usize| row[i].parse::<f64>().map_err(|_| bad(RECORD_HEADER[i], &row[i]));
        let counts = if row[7].is_empty() {
            Vec::new()
        } else {
            row[7].split(';').map(|c| c.parse::<usize>().map_err(|_| bad("n_per_level", &row[7]))).collect::<Result<_>>()?
        };
        out.push(ResultRecord {
            replication: row[0].parse().map_err(|_| bad("replication", &row[0]))?,
            estimator: row[1].to_owned(),
            budget: float(2)?,
            estimate: float(3)?,
            variance: if row[4].is_empty() { None } else { Some(float(4)?) },
            abs_error: float(5)?,
            cost: float(6)?,
            n_per_level: counts,
        });
    }
    Ok(out)
}

pub fn write_cells<W: Write>(out: W, cells: &[CellLog]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["budget", "replication", "data", "sha256", "estimators"])?;
    for c in cells {
        w.write_record([c.budget.to_string(), c.replication.to_string(), c.data.clone(), c.hash.clone(), c.estimators.join(";")])?;
    }
    w.flush().map_err(|e| HarnessError::Csv(e.into()))?;
    Ok(())
}
