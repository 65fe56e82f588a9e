//! CSV, text and manifest writers.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// Scientific notation with 17 significant digits, which round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// An in-memory CSV table of preformatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner()
            .map_err(|e| Error::Config(format!("csv buffer: {e}")))
    }
}

/// Outcome of one contract check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contract {
    pub name: String,
    pub value: f64,
    /// Human-readable pass condition, e.g. `<= 1e-2`.
    pub limit: String,
    pub pass: bool,
}

impl Contract {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Contract {
            name: name.into(),
            value,
            limit: format!("<= {limit:e}"),
            pass: value <= limit,
        }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Contract {
            name: name.into(),
            value,
            limit: format!(">= {limit:e}"),
            pass: value >= limit,
        }
    }

    pub fn holds(name: &str, value: f64, pass: bool, limit: &str) -> Self {
        Contract {
            name: name.into(),
            value,
            limit: limit.into(),
            pass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    ContractViolation,
    NumericalFailure,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::ContractViolation => 1,
            Status::Error => 2,
            Status::NumericalFailure => 3,
        }
    }

    pub fn of_error(e: &Error) -> Status {
        if e.exit_code() == 3 {
            Status::NumericalFailure
        } else {
            Status::Error
        }
    }
}

/// Record of one run inside an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub name: String,
    pub status: Status,
    /// Error text for failed runs.
    pub diagnostic: Option<String>,
    pub contracts: Vec<Contract>,
    /// Failed checks that are recorded as findings rather than contract violations.
    pub findings: Vec<String>,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
    /// Grid, scheme and result details specific to the run kind.
    pub details: serde_json::Value,
    pub wall_clock_s: f64,
}

impl RunRecord {
    pub fn new(name: &str) -> Self {
        RunRecord {
            name: name.into(),
            status: Status::Pass,
            diagnostic: None,
            contracts: Vec::new(),
            findings: Vec::new(),
            outputs: Vec::new(),
            details: serde_json::Value::Null,
            wall_clock_s: 0.0,
        }
    }

    /// Sets the status from the contracts unless a failure was already recorded.
    pub fn settle(&mut self) {
        if self.status == Status::Pass && self.contracts.iter().any(|c| !c.pass) {
            self.status = Status::ContractViolation;
        }
    }

    pub fn fail(&mut self, e: &Error) {
        self.status = Status::of_error(e);
        self.diagnostic = Some(e.to_string());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch at the end of the run.
    pub timestamp: u64,
    pub kind: String,
    pub seed: u64,
    pub threads: usize,
    /// The config as loaded, and its validated form.
    pub config_text: String,
    pub config: serde_json::Value,
    pub runs: Vec<RunRecord>,
    pub status: Status,
    pub exit_code: i32,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        write_atomic(&path, &bytes)?;
        Ok(path)
    }
}

/// Worst status across runs: numerical failure, then error, then violation.
pub fn overall(runs: &[RunRecord]) -> Status {
    let has = |s| runs.iter().any(|r| r.status == s);
    if has(Status::NumericalFailure) {
        Status::NumericalFailure
    } else if has(Status::Error) {
        Status::Error
    } else if has(Status::ContractViolation) {
        Status::ContractViolation
    } else {
        Status::Pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_text() {
        for v in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            6.02214076e23,
            f64::MIN_POSITIVE,
            0.0,
        ] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
            let digits = s
                .split('e')
                .next()
                .unwrap()
                .chars()
                .filter(|c| c.is_ascii_digit())
                .count();
            assert_eq!(digits, 17, "{s}");
        }
        assert_eq!(fmt_f64(f64::NAN), "NaN");
        assert_eq!(fmt_opt(None), "");
    }

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_atomic(&p, b"x\n").unwrap();
        write_atomic(&p, b"y\n").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"y\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn overall_status_prefers_failures() {
        let mut a = RunRecord::new("a");
        let mut b = RunRecord::new("b");
        a.contracts.push(Contract::at_most("r", 2.0, 1.0));
        a.settle();
        assert_eq!(overall(&[a.clone(), b.clone()]), Status::ContractViolation);
        b.fail(&Error::Vacuum {
            rho: 0.0,
            cell: 3,
            t: 0.1,
        });
        assert_eq!(overall(&[a, b]).exit_code(), 3);
    }
}
