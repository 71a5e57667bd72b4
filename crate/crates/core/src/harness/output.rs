//! CSV and JSON emission.

use std::path::Path;

use super::{ExperimentRecord, ExperimentSummary};
use crate::textio::fmt_f64;
use crate::{Error, Result};

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 18] = [
    "trial",
    "mu",
    "mu_block",
    "nu",
    "condition_strict",
    "condition_nonstrict",
    "tail_l1",
    "tail_block",
    "meas_error",
    "ds_error",
    "sig_error",
    "bound_meas",
    "bound_sig",
    "pass_meas",
    "pass_sig",
    "iterations",
    "kkt_residual",
    "wall_ms",
];

fn num(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn flag(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

fn row(r: &ExperimentRecord) -> [String; 18] {
    [
        r.trial.to_string(),
        fmt_f64(r.mu),
        num(r.mu_block),
        num(r.nu),
        r.condition_strict.to_string(),
        r.condition_nonstrict.to_string(),
        num(r.tail_l1),
        num(r.tail_block),
        num(r.meas_error),
        num(r.ds_error),
        num(r.sig_error),
        num(r.bound_meas),
        num(r.bound_sig),
        flag(r.pass_meas),
        flag(r.pass_sig),
        r.iterations.map(|i| i.to_string()).unwrap_or_default(),
        num(r.kkt_residual),
        num(r.wall_ms),
    ]
}

/// Renders records as CSV text with a header row. Undefined values are
/// empty fields.
pub fn records_to_csv(records: &[ExperimentRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records to emit".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in records {
        w.write_record(row(r)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

pub fn emit_csv(records: &[ExperimentRecord], path: impl AsRef<Path>) -> Result<()> {
    let text = records_to_csv(records)?;
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn emit_json(summary: &ExperimentSummary, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> ExperimentRecord {
        ExperimentRecord {
            trial: 0,
            mu: 0.25,
            mu_block: None,
            nu: None,
            condition_strict: true,
            condition_nonstrict: true,
            tail_l1: Some(0.0),
            tail_block: None,
            meas_error: Some(0.1),
            ds_error: Some(0.05),
            sig_error: Some(0.2),
            bound_meas: Some(1.0),
            bound_sig: Some(2.0),
            pass_meas: Some(true),
            pass_sig: Some(true),
            iterations: Some(12),
            kkt_residual: Some(1e-9),
            wall_ms: None,
            converged: true,
            failure: None,
        }
    }

    #[test]
    fn one_record_gives_two_lines() {
        let text = records_to_csv(&[record()]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert!(lines[1].starts_with("0,2.5000000000000000e-1,,,true,true,"));
        assert!(lines[1].ends_with(",true,true,12,1.0000000000000001e-9,"));
    }

    #[test]
    fn empty_input_creates_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        assert!(emit_csv(&[], &path).is_err());
        assert!(!path.exists());
    }

    #[test]
    fn unwritable_path_reports_it() {
        let err = emit_csv(&[record()], "/nonexistent-dir/x.csv").unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
