use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Mode};
use super::ledger::Ledger;
use crate::error::{Error, Result};
use crate::regularity::BranchingProfile;

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub size: usize,
    pub uniform_size: usize,
    /// SHA-256 of the generated set in text form.
    pub digest: String,
    pub frostman_constant: f64,
    pub kt_constant: f64,
    pub products_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub mode: Mode,
    pub config: ExperimentConfig,
    pub input: InputSummary,
    pub exponents: BTreeMap<String, f64>,
    pub ledger: Ledger,
    pub profiles: BTreeMap<String, BranchingProfile>,
    pub hard_pass: bool,
    /// Log entries whose slack exceeds `10ε`.
    pub flagged: Vec<String>,
}

impl Report {
    pub(crate) fn new(
        config: &ExperimentConfig,
        input: InputSummary,
        exponents: BTreeMap<String, f64>,
        ledger: Ledger,
        profiles: BTreeMap<String, BranchingProfile>,
    ) -> Self {
        let limit = 10.0 * config.eps;
        let flagged = ledger
            .log_entries()
            .filter(|e| e.slack.map_or(!e.holds, |s| s > limit))
            .map(|e| e.name.clone())
            .collect();
        Self {
            schema: REPORT_SCHEMA,
            mode: config.mode,
            config: config.clone(),
            input,
            exponents,
            hard_pass: ledger.all_hard_pass(),
            ledger,
            profiles,
            flagged,
        }
    }

    pub fn exponent(&self, name: &str) -> Option<f64> {
        self.exponents.get(name).copied()
    }

    /// `true` when some log entry's slack exceeds `limit`.
    pub fn slack_exceeds(&self, limit: f64) -> bool {
        self.ledger.max_log_slack().is_some_and(|s| s > limit)
    }

    /// 0 when every hard entry holds (and the slack limit, if any, is met),
    /// 2 otherwise.
    pub fn exit_code(&self, max_slack: Option<f64>) -> i32 {
        if !self.hard_pass || max_slack.is_some_and(|l| self.slack_exceeds(l)) {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `report.json`, `ledger.csv` and one `profile_<name>.csv` per
/// profile into `dir`, creating it if needed. Returns the written paths.
pub fn emit_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = vec![
        write(dir.join("report.json"), &report.to_json()?)?,
        write(dir.join("ledger.csv"), &report.ledger.to_csv())?,
    ];
    for (name, profile) in &report.profiles {
        paths.push(write(dir.join(format!("profile_{name}.csv")), &profile.to_csv())?);
    }
    Ok(paths)
}
