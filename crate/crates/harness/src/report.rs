use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use loctime_core::export::{self, ExportError};
use serde::{Deserialize, Serialize};

use crate::config::CheckName;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: CheckName,
    pub status: Status,
    pub metrics: BTreeMap<String, f64>,
    pub artifacts: Vec<PathBuf>,
    /// Selected checks that pulled this one in although it was not
    /// selected itself; empty for selected checks.
    pub required_by: Vec<CheckName>,
}

impl CheckRecord {
    pub fn skipped(name: CheckName) -> Self {
        Self { name, status: Status::Skipped, metrics: BTreeMap::new(), artifacts: Vec::new(), required_by: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub seed: u64,
    pub version: String,
    /// Seconds.
    pub wall_time: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckRecord>,
    pub environment: Environment,
}

impl VerificationReport {
    pub fn get(&self, name: CheckName) -> &CheckRecord {
        self.checks.iter().find(|c| c.name == name).expect("every check has a record")
    }

    /// True when no check that ran failed.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn artifacts(&self) -> impl Iterator<Item = &Path> {
        self.checks.iter().flat_map(|c| c.artifacts.iter().map(PathBuf::as_path))
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), ExportError> {
        export::write_json(path, self)
    }
}
