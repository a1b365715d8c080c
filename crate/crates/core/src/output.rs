//! Artifact writers: CSV time series and the JSON run summary.
//!
//! CSV floats are serialized with 17 significant digits, which round-trips
//! every binary64 value exactly; identical reports therefore produce
//! byte-identical files. The JSON summary echoes the effective configuration,
//! the build version, the seed, any command-line overrides, the verdicts that
//! decide the exit status, and the experiment's structured report.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::exponents::GateVerdict;

/// Version string stamped into artifacts (git describe of the build).
pub fn version_string() -> &'static str {
    env!("SDNLSE_GIT_DESCRIBE")
}

/// Serialize one float with 17 significant digits (exact binary64
/// round-trip).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A rectangular table of named float columns, written as CSV.
#[derive(Debug, Clone, Default)]
pub struct Table {
    columns: Vec<(String, Vec<f64>)>,
}

impl Table {
    pub fn new() -> Table {
        Table::default()
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) -> &mut Table {
        self.columns.push((name.into(), values));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Render as CSV: header row, one record per index. All columns must
    /// have equal lengths.
    pub fn to_csv(&self) -> Result<String> {
        if self.columns.is_empty() {
            return Err(Error::Config("csv table has no columns".into()));
        }
        let rows = self.columns[0].1.len();
        for (name, col) in &self.columns {
            if col.len() != rows {
                return Err(Error::Config(format!(
                    "csv table is ragged: column {name:?} has {} rows, expected {rows}",
                    col.len()
                )));
            }
        }
        let mut out = String::new();
        let names: Vec<&str> = self.columns.iter().map(|(n, _)| n.as_str()).collect();
        out.push_str(&names.join(","));
        out.push('\n');
        for i in 0..rows {
            for (k, (_, col)) in self.columns.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&fmt_f64(col[i]));
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let text = self.to_csv()?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, text).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })
    }
}

/// The run summary serialized to `summary.json`.
#[derive(Debug, Serialize)]
pub struct Summary {
    /// Build version (git describe).
    pub version: String,
    /// Subcommand that produced this run.
    pub command: String,
    /// Master seed the run used.
    pub seed: u64,
    /// Assumption-gate verdict for (d, sigma, alpha).
    pub gate: GateVerdict,
    /// Whether a gate rejection was overridden with --force.
    pub forced: bool,
    /// Effective configuration (command-line overrides already applied).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    /// Keys changed by command-line flags, with their effective values.
    pub overrides: BTreeMap<String, String>,
    /// Named pass/fail verdicts; all must hold for exit status 0.
    pub verdicts: BTreeMap<String, bool>,
    /// Named fitted constants and scalar findings.
    pub fitted: BTreeMap<String, f64>,
    /// Full structured report of the experiment.
    pub report: serde_json::Value,
}

impl Summary {
    pub fn all_verdicts_pass(&self) -> bool {
        self.verdicts.values().all(|&v| v)
    }
}

/// Write `summary.json` (pretty-printed, stable key order).
pub fn write_summary(summary: &Summary, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(summary)
        .map_err(|e| Error::Config(format!("summary serialize: {e}")))?;
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, text + "\n").map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}
