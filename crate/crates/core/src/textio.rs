//! Whitespace text formats for matrices and vectors.

use std::fmt::Write as _;

use crate::{Error, Result};

/// 17 significant digits, enough to round-trip any f64.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_f64(tok: &str, what: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::Parse(format!("{what}: cannot parse {tok:?} as a number")))
}

pub(crate) fn parse_usize(tok: &str, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::Parse(format!("{what}: cannot parse {tok:?} as an integer")))
}

pub(crate) fn write_rows(out: &mut String, rows: impl Iterator<Item = Vec<f64>>) {
    for row in rows {
        let line: Vec<String> = row.into_iter().map(fmt_f64).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
}
