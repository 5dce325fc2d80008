//! Reports: per-check records plus residual-vs-N tables, written as JSON or CSV.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CSV_HEADER: [&str; 6] = ["scenario", "check", "residual", "tolerance", "pass", "wall_ms"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Absent when the check could not be evaluated; `error` says why.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub wall_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    /// (N, residual), ascending N.
    pub rows: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub config: serde_json::Value,
    pub version: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Report {
    pub fn new(scenario: &str, config: &impl Serialize) -> Self {
        Report {
            scenario: scenario.to_string(),
            checks: vec![],
            tables: vec![],
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Records a check; pass iff the residual is finite and within `tol`.
    pub fn check<E: std::fmt::Display>(&mut self, name: &str, tol: f64, f: impl FnOnce() -> Result<f64, E>) {
        self.check_with(name, tol, |r| r <= tol, f)
    }

    /// Records a check with a custom pass rule; errors are recorded as failures.
    pub fn check_with<E: std::fmt::Display>(
        &mut self,
        name: &str,
        tol: f64,
        pass: impl FnOnce(f64) -> bool,
        f: impl FnOnce() -> Result<f64, E>,
    ) {
        let t = Instant::now();
        let out = f().map_err(|e| e.to_string());
        self.push(name, out, tol, pass, t.elapsed().as_millis() as u64);
    }

    pub fn push(&mut self, name: &str, out: Result<f64, String>, tol: f64, pass: impl FnOnce(f64) -> bool, wall_ms: u64) {
        let (residual, error) = match out {
            Ok(r) if r.is_finite() => (Some(r), None),
            Ok(r) => (None, Some(format!("non-finite residual {r}"))),
            Err(e) => (None, Some(e)),
        };
        let pass = residual.is_some_and(pass);
        self.checks.push(Check { name: name.to_string(), residual, tolerance: tol, pass, wall_ms, error });
    }

    pub fn table(&mut self, name: &str, rows: Vec<(usize, f64)>) {
        self.tables.push(Table { name: name.to_string(), rows });
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(vec![]);
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(CSV_HEADER).map_err(io)?;
        for c in &self.checks {
            let r = c.residual.map(|r| format!("{r:e}")).unwrap_or_default();
            w.write_record([
                self.scenario.as_str(),
                &c.name,
                &r,
                &format!("{:e}", c.tolerance),
                if c.pass { "true" } else { "false" },
                &c.wall_ms.to_string(),
            ])
            .map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn to_json(&self) -> Result<Vec<u8>, CliError> {
        let mut v = serde_json::to_vec_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        v.push(b'\n');
        Ok(v)
    }

    pub fn render(&self, f: Format) -> Result<Vec<u8>, CliError> {
        match f {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }

    /// Writes to `path` via a temporary file in the same directory and a rename.
    pub fn emit(&self, path: &Path, f: Format) -> Result<(), CliError> {
        let bytes = self.render(f)?;
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        tmp.write_all(&bytes).map_err(io)?;
        tmp.persist(path).map_err(|e| io(e.error))?;
        Ok(())
    }
}
