//! Report structures and the files written for a run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pipeline::PipelineResults;
use super::Scenario;
use crate::base::BaseDescriptor;
use crate::cocycle::DominationReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Every check passed, but some holonomies were only `C^0` certified.
    Degraded,
}

impl Verdict {
    /// Process exit status: 0 for pass and degraded, 1 for fail.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass | Verdict::Degraded => 0,
            Verdict::Fail => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Degraded => "degraded",
        }
    }
}

/// One measured quantity compared with its threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub relation: String,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, measured: f64, threshold: f64) -> Self {
        Check::new(name, measured, "<=", threshold, measured <= threshold)
    }

    pub fn below(name: &str, measured: f64, threshold: f64) -> Self {
        Check::new(name, measured, "<", threshold, measured < threshold)
    }

    pub fn above(name: &str, measured: f64, threshold: f64) -> Self {
        Check::new(name, measured, ">", threshold, measured > threshold)
    }

    /// A yes/no condition, recorded as `1 == 1`.
    pub fn holds(name: &str, ok: bool) -> Self {
        Check::new(name, if ok { 1.0 } else { 0.0 }, "==", 1.0, ok)
    }

    fn new(name: &str, measured: f64, relation: &str, threshold: f64, passed: bool) -> Self {
        Check {
            name: name.to_string(),
            measured,
            relation: relation.to_string(),
            threshold,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationSummary {
    pub alpha: DominationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<DominationReport>,
}

/// Deterministic part of a run: the same scenario gives the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: Scenario,
    pub base: BaseDescriptor,
    pub domination: Option<DominationSummary>,
    pub results: Option<PipelineResults>,
    pub checks: Vec<Check>,
    pub degraded: bool,
    /// Error that stopped the pipeline, if any.
    pub error: Option<String>,
    pub verdict: Verdict,
}

impl Report {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Run facts that vary between runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub scenario: String,
    pub version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub elapsed_seconds: f64,
    pub budget_seconds: f64,
    pub workers: usize,
    pub parallel: bool,
    /// Wall time of named stages, in seconds.
    pub timings: BTreeMap<String, f64>,
}

/// A plot-ready data series, written as `<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, header: &'static [&'static str]) -> Self {
        Table {
            name,
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Io(e.to_string()))?;
        w.write_record(self.header)
            .map_err(|e| Error::Io(e.to_string()))?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// Formats a float so that it round-trips.
pub(crate) fn num(v: f64) -> String {
    format!("{v:e}")
}

/// Writes `report.json`, `metadata.json` and every table into `dir`.
pub fn write_all(
    dir: &Path,
    report: &Report,
    tables: &[Table],
    meta: &Metadata,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    let rp = dir.join("report.json");
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(&rp, json + "\n")?;
    out.push(rp);
    for t in tables {
        out.push(t.write(dir)?);
    }
    let mp = dir.join("metadata.json");
    let json = serde_json::to_string_pretty(meta).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(&mp, json + "\n")?;
    out.push(mp);
    Ok(out)
}
