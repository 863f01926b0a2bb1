//! CSV tables and the JSON run report.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// Fixed 17-significant-digit rendering, so equal runs give equal bytes.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// One CSV file: a header and preformatted records.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, header: &[&'static str]) -> Self {
        Table { file: file.to_string(), header: header.to_vec(), rows: vec![] }
    }

    pub fn push(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|v| num(*v)).collect());
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(&self.file);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Verdict of one check made by a command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    /// The measured quantity and the limit it was held to, when there is one.
    pub value: Option<f64>,
    pub limit: Option<f64>,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
    pub seconds: Option<f64>,
}

impl CheckRecord {
    /// `value <= limit`.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        let passed = value <= limit;
        let detail = if passed { "ok".into() } else { format!("{value:.3e} exceeds {limit:.1e}") };
        CheckRecord {
            name: name.into(),
            passed,
            value: Some(value),
            limit: Some(limit),
            detail,
            metrics: BTreeMap::new(),
            seconds: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success,
    ValidationFailure,
    NumericalFailure,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::ValidationFailure => 1,
            Status::NumericalFailure => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub version: &'static str,
    pub config: String,
    pub status: Status,
    pub exit_code: i32,
    pub seed: u64,
    pub threads: usize,
    pub parameters: serde_json::Value,
    pub tolerances: serde_json::Value,
    pub checks: Vec<CheckRecord>,
    pub outputs: Vec<String>,
    pub error: Option<String>,
    pub wall_time_seconds: f64,
}

impl Report {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("report.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_carry_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
        for v in [std::f64::consts::PI, 1e-300, -7.25e12] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn tables_use_lf_and_a_header() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("a.csv", &["x", "t", "value"]);
        t.push(&[0.0, 1.0, 0.5]);
        t.write(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
        assert_eq!(text, "x,t,value\n0.0000000000000000e0,1.0000000000000000e0,5.0000000000000000e-1\n");
    }

    #[test]
    fn failed_bounds_say_by_how_much() {
        let c = CheckRecord::at_most("gap", 2e-3, 1e-3);
        assert!(!c.passed && c.detail.contains("2.000e-3"));
        assert!(CheckRecord::at_most("gap", 1e-4, 1e-3).passed);
        assert!(!CheckRecord::at_most("gap", f64::NAN, 1e-3).passed);
    }
}
