//! CSV tables, runtime invariant checks and the JSON metadata sidecar.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

/// One CSV cell. Floats are written with 17 significant digits so that
/// re-parsing reproduces the in-memory value exactly.
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<i32> for Cell {
    fn from(x: i32) -> Self {
        Cell::Int(x.into())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn render_csv(header: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            match cell {
                Cell::Num(x) => out.push_str(&format_float(*x)),
                Cell::Int(n) => write!(out, "{n}").expect("writing to a String"),
                Cell::Text(s) => out.push_str(s),
                Cell::Empty => {}
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

/// Runtime invariant checks; a NaN value always fails.
#[derive(Debug, Default, Serialize)]
#[serde(transparent)]
pub struct Checks(Vec<Check>);

impl Checks {
    /// Passes when `value ≤ limit`.
    pub fn at_most(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.0.push(Check { name: name.into(), value, limit, passed: value <= limit });
    }

    pub fn all_passed(&self) -> bool {
        self.0.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.0.iter().filter(|c| !c.passed)
    }
}

#[derive(Serialize)]
pub struct Sidecar<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: u64,
    pub tol: f64,
    pub config: &'a RunConfig,
    pub outputs: &'a [String],
    pub checks: &'a Checks,
    pub passed: bool,
    pub report: &'a serde_json::Value,
}

impl Sidecar<'_> {
    pub fn render(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.389_123_456_789e-12, -2.5e300, 5e-324] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_layout() {
        let rows = vec![vec![Cell::from(1), Cell::from(0.5), Cell::Empty, Cell::from("x".to_string())]];
        assert_eq!(render_csv(&["a", "b", "c", "d"], &rows), "a,b,c,d\n1,5.0000000000000000e-1,,x\n");
    }

    #[test]
    fn nan_fails_checks() {
        let mut c = Checks::default();
        c.at_most("ok", 1.0, 2.0);
        assert!(c.all_passed());
        c.at_most("nan", f64::NAN, 2.0);
        assert!(!c.all_passed());
        assert_eq!(c.failures().count(), 1);
    }
}
