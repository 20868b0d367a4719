//! Frequentist coverage of central Gaussian credible intervals.

use mlbq::special::central_quantile;

use crate::engine::ResultRecord;
use crate::error::{HarnessError, Result};

pub const MIN_REPLICATIONS: usize = 20;

pub const DEFAULT_LEVELS: [f64; 11] = [0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95, 0.99];

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow {
    pub estimator: String,
    pub budget: f64,
    pub level: f64,
    pub coverage: f64,
    /// `√(q(1 − q)/R)` at the nominal level.
    pub std_error: f64,
    pub replications: usize,
}

/// Coverage per (estimator, budget) and nominal level `q`: the fraction of
/// records with `|estimate − reference| ≤ z(q)√variance`. Records without a
/// variance are skipped; groups appear in first-seen order.
pub fn calibration_table(records: &[ResultRecord], levels: &[f64]) -> Result<Vec<CalibrationRow>> {
    if levels.iter().any(|&q| !(q > 0.0 && q < 1.0)) {
        return Err(HarnessError::config("credible levels must lie in (0, 1)"));
    }
    let mut groups: Vec<((&str, f64), Vec<&ResultRecord>)> = Vec::new();
    for r in records.iter().filter(|r| r.variance.is_some()) {
        let key = (r.estimator.as_str(), r.budget);
        match groups.iter_mut().find(|(k, _)| k.0 == key.0 && k.1.to_bits() == key.1.to_bits()) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    if groups.is_empty() {
        return Err(HarnessError::config("no records carry a posterior variance"));
    }
    let mut rows = Vec::new();
    for ((estimator, budget), recs) in groups {
        if recs.len() < MIN_REPLICATIONS {
            return Err(HarnessError::config(format!(
                "{estimator} at budget {budget}: {} replications, calibration needs at least {MIN_REPLICATIONS}",
                recs.len()
            )));
        }
        let n = recs.len() as f64;
        for &q in levels {
            let z = central_quantile(q);
            let hits = recs.iter().filter(|r| r.abs_error <= z * r.variance.expect("filtered").max(0.0).sqrt()).count();
            rows.push(CalibrationRow {
                estimator: estimator.to_owned(),
                budget,
                level: q,
                coverage: hits as f64 / n,
                std_error: (q * (1.0 - q) / n).sqrt(),
                replications: recs.len(),
            });
        }
    }
    Ok(rows)
}

pub fn write_calibration<W: std::io::Write>(out: W, rows: &[CalibrationRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["estimator", "budget", "level", "coverage", "std_error", "replications"])?;
    for r in rows {
        w.write_record([
            r.estimator.clone(),
            r.budget.to_string(),
            r.level.to_string(),
            r.coverage.to_string(),
            r.std_error.to_string(),
            r.replications.to_string(),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::Csv(e.into()))?;
    Ok(())
}
