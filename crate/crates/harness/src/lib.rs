//! Config-driven verification campaigns over `loctime-core`.
//!
//! A campaign loads a chain file, runs the selected [`CheckName`]s in
//! dependency order and writes every table it computes under
//! `output_dir`, together with a [`VerificationReport`].

pub mod checks;
pub mod config;
pub mod report;
pub mod runner;

use std::path::{Path, PathBuf};

use loctime_core::export::{self, ExportError};
use loctime_core::ChainError;
use serde::Serialize;
use thiserror::Error;

pub use config::{CheckName, ExperimentConfig};
pub use report::{CheckRecord, Environment, Status, VerificationReport};
pub use runner::{run_experiment, RunOptions};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("chain rejected: {0}")]
    ChainRejected(#[from] ChainError),
    #[error("{checks:?} need an aperiodic chain, but |λ_t| = {rho} at t = {offending_t}")]
    AperiodicityRequired { checks: Vec<CheckName>, rho: f64, offending_t: f64 },
    #[error("{check}: {message}")]
    Check { check: CheckName, message: String },
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("{0}")]
    Io(String),
}

/// Format of tabular artifacts. Report and per-record files are always JSON.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    /// Write `rows` to `dir/stem.<ext>`.
    pub fn write<R: Serialize>(self, dir: &Path, stem: &str, rows: &[R]) -> Result<PathBuf, ExportError> {
        let path = dir.join(format!("{stem}.{}", self.extension()));
        match self {
            Format::Csv => export::write_csv(&path, rows)?,
            Format::Json => export::write_json(&path, rows)?,
        }
        Ok(path)
    }
}
