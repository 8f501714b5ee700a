use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// The verification checks, declared in dependency order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    Spectral,
    Aperiodicity,
    ExactLaw,
    LocalLimit,
    PotentialKernel,
    Moments,
    Occupation,
    Modulus,
    LevyKs,
}

impl CheckName {
    pub const ALL: [CheckName; 9] = [
        CheckName::Spectral,
        CheckName::Aperiodicity,
        CheckName::ExactLaw,
        CheckName::LocalLimit,
        CheckName::PotentialKernel,
        CheckName::Moments,
        CheckName::Occupation,
        CheckName::Modulus,
        CheckName::LevyKs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Spectral => "spectral",
            CheckName::Aperiodicity => "aperiodicity",
            CheckName::ExactLaw => "exact-law",
            CheckName::LocalLimit => "local-limit",
            CheckName::PotentialKernel => "potential-kernel",
            CheckName::Moments => "moments",
            CheckName::Occupation => "occupation",
            CheckName::Modulus => "modulus",
            CheckName::LevyKs => "levy-ks",
        }
    }

    /// Uses σ² from the spectral check.
    pub fn needs_sigma2(self) -> bool {
        matches!(self, CheckName::LocalLimit | CheckName::PotentialKernel | CheckName::LevyKs)
    }

    /// Compares a law against a lattice limit; meaningless on periodic chains.
    pub fn is_distributional(self) -> bool {
        matches!(self, CheckName::LocalLimit | CheckName::LevyKs)
    }

    pub fn simulates(self) -> bool {
        matches!(self, CheckName::Moments | CheckName::Occupation | CheckName::Modulus | CheckName::LevyKs)
    }
}

impl std::fmt::Display for CheckName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A verification campaign. `chain_file` is resolved against the directory
/// of the config file when relative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub chain_file: PathBuf,
    pub n_values: Vec<usize>,
    /// One count for every `n`, or a single count shared by all.
    pub sample_counts: Vec<usize>,
    pub seed: u64,
    pub x_levels: Vec<i64>,
    pub y_levels: Vec<i64>,
    pub intervals: Vec<(f64, f64)>,
    pub eps_grid: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub output_dir: PathBuf,
    pub checks: Vec<CheckName>,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::ConfigInvalid(format!("{}: {e}", path.display())))?;
        let mut config: Self =
            serde_json::from_str(&text).map_err(|e| HarnessError::ConfigInvalid(format!("{}: {e}", path.display())))?;
        if config.chain_file.is_relative() {
            if let Some(dir) = path.parent() {
                config.chain_file = dir.join(&config.chain_file);
            }
        }
        Ok(config)
    }

    /// Sample count paired with `n_values[i]`.
    pub fn samples(&self, i: usize) -> usize {
        if self.sample_counts.len() == 1 {
            self.sample_counts[0]
        } else {
            self.sample_counts[i]
        }
    }

    /// `(n, samples)` for the largest `n`.
    pub fn largest(&self) -> (usize, usize) {
        let i = (0..self.n_values.len()).max_by_key(|&i| self.n_values[i]).expect("validated");
        (self.n_values[i], self.samples(i))
    }

    /// Level pairs `(x, y)` with `x ≠ y`.
    pub fn level_pairs(&self) -> Vec<(i64, i64)> {
        self.x_levels.iter().flat_map(|&x| self.y_levels.iter().map(move |&y| (x, y))).filter(|(x, y)| x != y).collect()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::ConfigInvalid(m));
        let selected: BTreeSet<CheckName> = self.checks.iter().copied().collect();
        if selected.len() != self.checks.len() {
            return bad("checks lists a check more than once".into());
        }
        if !self.chain_file.is_file() {
            return bad(format!("chain_file {} does not exist", self.chain_file.display()));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return bad("n_values must be a nonempty list of positive step counts".into());
        }
        let has = |c: CheckName| selected.contains(&c);
        if selected.iter().any(|c| c.simulates()) {
            if self.sample_counts.is_empty() || self.sample_counts.contains(&0) {
                return bad("sample_counts must be nonempty and positive".into());
            }
            if self.sample_counts.len() != 1 && self.sample_counts.len() != self.n_values.len() {
                return bad(format!(
                    "sample_counts has {} entries; expected 1 or one per n ({})",
                    self.sample_counts.len(),
                    self.n_values.len()
                ));
            }
        }
        if (has(CheckName::LocalLimit) || has(CheckName::PotentialKernel) || has(CheckName::Moments))
            && self.x_levels.is_empty()
        {
            return bad("x_levels must be nonempty".into());
        }
        if (has(CheckName::PotentialKernel) || has(CheckName::Moments)) && self.level_pairs().is_empty() {
            return bad("x_levels × y_levels has no pair with x ≠ y".into());
        }
        if has(CheckName::Moments)
            && (self.eps_grid.is_empty() || self.eps_grid.iter().any(|&e| e.is_nan() || e <= 0.0))
        {
            return bad("eps_grid must be nonempty and positive".into());
        }
        if has(CheckName::LocalLimit) && self.n_values.len() < 2 {
            return bad("local-limit needs at least two n_values".into());
        }
        if has(CheckName::Occupation)
            && (self.intervals.is_empty()
                || self.intervals.iter().any(|&(a, b)| a >= b || !a.is_finite() || !b.is_finite()))
        {
            return bad("intervals must be nonempty with finite a < b".into());
        }
        if has(CheckName::Modulus)
            && (self.delta_grid.is_empty() || self.delta_grid.iter().any(|&d| !(d > 0.0 && d < 0.5)))
        {
            return bad("delta_grid must be nonempty with 0 < δ < 1/2".into());
        }
        Ok(())
    }
}
