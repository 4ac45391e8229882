//! Output files: CSV tables, the verdict file, run metadata, and the
//! canonical config echo.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which
//! round-trips f64 exactly and keeps repeated runs byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{config_echo, RawConfig};
use crate::Result;

/// Lossless fixed-width float formatting for CSV bodies.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a CSV file with the given header and pre-formatted rows.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut body = String::with_capacity(rows.len() * 64);
    body.push_str(header);
    body.push('\n');
    for row in rows {
        body.push_str(&row.join(","));
        body.push('\n');
    }
    fs::write(path, body)?;
    Ok(())
}

/// One named pass/fail comparison inside a verdict.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    /// How `value` relates to `threshold` when passing, e.g. "<=" or ">".
    pub comparison: String,
}

impl Check {
    pub fn max_le(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
            comparison: "<=".into(),
        }
    }

    pub fn min_gt(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: value > threshold,
            value,
            threshold,
            comparison: ">".into(),
        }
    }
}

/// Machine-readable PASS/FAIL summary of a check-style run.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub verdict: String,
    pub checks: Vec<Check>,
}

impl Verdict {
    pub fn from_checks(checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self {
            verdict: if passed { "PASS" } else { "FAIL" }.into(),
            checks,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == "PASS"
    }
}

/// Run provenance written next to the data files.
#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    /// Self-attraction frequency derived from a density profile, if any.
    pub omega_g_from_profile: Option<f64>,
    pub wall_time_seconds: f64,
}

/// Prepares the output directory and owns the standard file set: config
/// echo, metadata, verdict, plus any CSVs the run adds.
pub struct RunReport {
    dir: PathBuf,
}

impl RunReport {
    pub fn create(dir: &Path, raw: &RawConfig) -> Result<Self> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config_echo.toml"), config_echo(raw))?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn csv(&self, name: &str, header: &str, rows: &[Vec<String>]) -> Result<()> {
        write_csv(&self.dir.join(name), header, rows)
    }

    pub fn verdict(&self, verdict: &Verdict) -> Result<()> {
        let json = serde_json::to_string_pretty(verdict).expect("verdict serializes");
        fs::write(self.dir.join("verdict.json"), json)?;
        Ok(())
    }

    pub fn metadata(&self, meta: &Metadata) -> Result<()> {
        let json = serde_json::to_string_pretty(meta).expect("metadata serializes");
        fs::write(self.dir.join("metadata.json"), json)?;
        Ok(())
    }
}
