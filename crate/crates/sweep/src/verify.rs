//! Re-run a config and compare against a baseline CSV.

use std::path::Path;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::SweepError;
use crate::runner::{execute, TaskState};

pub const DEFAULT_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    /// Data row, counting from 1 (the header is not counted).
    pub row: usize,
    pub column: String,
    pub expected: String,
    pub actual: String,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub rtol: f64,
    pub rows_compared: usize,
    pub failed_tasks: usize,
    pub first_divergence: Option<Divergence>,
    /// Structural mismatch (header or row count), if any.
    pub mismatch: Option<String>,
}

impl std::fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.passed {
            return write!(
                f,
                "PASS: {} rows agree within rtol {:e}",
                self.rows_compared, self.rtol
            );
        }
        write!(f, "FAIL")?;
        if let Some(m) = &self.mismatch {
            write!(f, ": {m}")?;
        }
        if let Some(d) = &self.first_divergence {
            write!(
                f,
                ": first divergence at row {}, column `{}`: baseline {} vs {} (relative error {:.3e}, rtol {:e})",
                d.row, d.column, d.expected, d.actual, d.relative_error, self.rtol
            )?;
        }
        if self.failed_tasks > 0 {
            write!(f, " ({} task(s) failed)", self.failed_tasks)?;
        }
        Ok(())
    }
}

fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a.is_nan() && b.is_nan() {
        return 0.0;
    }
    let scale = a.abs().max(b.abs());
    if !scale.is_finite() {
        return f64::INFINITY;
    }
    (a - b).abs() / scale
}

fn read_csv(bytes: &[u8]) -> Result<(Vec<String>, Vec<Vec<String>>), SweepError> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<Vec<Vec<String>>, _>>()?;
    Ok((header, rows))
}

/// Compare two CSV tables cell by cell with relative tolerance `rtol`.
pub fn compare_tables(
    baseline: &[u8],
    actual: &[u8],
    rtol: f64,
) -> Result<VerifyReport, SweepError> {
    let (bh, brows) = read_csv(baseline)?;
    let (ah, arows) = read_csv(actual)?;
    let mut report = VerifyReport {
        passed: false,
        rtol,
        rows_compared: 0,
        failed_tasks: 0,
        first_divergence: None,
        mismatch: None,
    };
    if bh != ah {
        report.mismatch = Some(format!("header differs: baseline {bh:?} vs {ah:?}"));
        return Ok(report);
    }
    for (i, (b, a)) in brows.iter().zip(&arows).enumerate() {
        report.rows_compared = i + 1;
        for (j, (bc, ac)) in b.iter().zip(a).enumerate() {
            let bv: f64 = bc.parse().map_err(|_| {
                SweepError::Baseline(format!(
                    "row {}, column `{}`: `{bc}` is not a number",
                    i + 1,
                    bh[j]
                ))
            })?;
            let av: f64 = ac.parse().unwrap_or(f64::NAN);
            let err = relative_error(bv, av);
            if !(err <= rtol) {
                report.first_divergence = Some(Divergence {
                    row: i + 1,
                    column: bh[j].clone(),
                    expected: bc.clone(),
                    actual: ac.clone(),
                    relative_error: err,
                });
                return Ok(report);
            }
        }
    }
    if brows.len() != arows.len() {
        report.mismatch = Some(format!(
            "row count differs: baseline {} vs {}",
            brows.len(),
            arows.len()
        ));
        return Ok(report);
    }
    report.passed = true;
    Ok(report)
}

/// Re-run `cfg` in memory and compare with the baseline CSV at `baseline`.
pub fn verify(
    cfg: &ExperimentConfig,
    baseline: &Path,
    rtol: f64,
    workers: usize,
) -> Result<VerifyReport, SweepError> {
    if !(rtol >= 0.0) {
        return Err(SweepError::validation("rtol", "must be non-negative"));
    }
    if !baseline.is_file() {
        return Err(SweepError::BaselineMissing(baseline.to_path_buf()));
    }
    let expected = std::fs::read(baseline).map_err(|e| SweepError::io(baseline, e))?;
    let outcome = execute(cfg, workers)?;
    let mut report = compare_tables(&expected, &outcome.csv_bytes()?, rtol)?;
    report.failed_tasks = outcome
        .reports
        .iter()
        .filter(|r| r.status == TaskState::Failed)
        .count();
    if report.failed_tasks > 0 {
        report.passed = false;
    }
    Ok(report)
}
