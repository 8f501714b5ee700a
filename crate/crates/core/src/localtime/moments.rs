use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::simulate::simulate_fields;
use crate::chain::MarkovShift;
use crate::export::{self, ExportError};
use crate::scalar::Real;
use crate::stats::mean_stderr;

pub const DEFAULT_EPS: [f64; 3] = [0.25, 0.5, 1.0];
pub const MIN_SAMPLES: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentError {
    #[error("levels must differ (got x = y = {0})")]
    SameLevel(i64),
    #[error("need at least {MIN_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRecord {
    pub eps: f64,
    pub prob: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRecord {
    pub n: usize,
    pub x: i64,
    pub y: i64,
    /// Empirical `E[(L_n(x) − L_n(y))⁶]`.
    pub m6: f64,
    pub m6_stderr: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Empirical `P(|l_n(x/√n) − l_n(y/√n)| > ε)`.
    pub tails: Vec<TailRecord>,
}

impl MomentRecord {
    pub fn tail(&self, eps: f64) -> Option<&TailRecord> {
        self.tails.iter().find(|t| t.eps == eps)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), ExportError> {
        export::write_json(path, self)
    }
}

/// `(√n·d)³ + n²·d·log n + n²·(log n)²` with `d = |x − y|` in lattice units.
pub fn moment_rhs(n: usize, d: u64) -> f64 {
    let nf = n as f64;
    let d = d as f64;
    let ln = nf.ln();
    (nf.sqrt() * d).powi(3) + nf * nf * d * ln + nf * nf * ln * ln
}

pub fn moment_statistics<T: Real>(
    shift: &MarkovShift<T>,
    n: usize,
    x: i64,
    y: i64,
    samples: usize,
    seed: u64,
) -> Result<MomentRecord, MomentError> {
    Ok(moment_statistics_multi(shift, n, &[(x, y)], &DEFAULT_EPS, samples, seed)?.remove(0))
}

/// Several level pairs from one set of trajectories.
pub fn moment_statistics_multi<T: Real>(
    shift: &MarkovShift<T>,
    n: usize,
    pairs: &[(i64, i64)],
    eps: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<MomentRecord>, MomentError> {
    if let Some(&(x, _)) = pairs.iter().find(|(x, y)| x == y) {
        return Err(MomentError::SameLevel(x));
    }
    if samples < MIN_SAMPLES {
        return Err(MomentError::TooFewSamples(samples));
    }
    let diffs: Vec<Vec<i64>> = simulate_fields(shift, n, samples, seed, |_, f| {
        pairs.iter().map(|&(x, y)| f.count(x) as i64 - f.count(y) as i64).collect()
    });
    let sqrt_n = (n as f64).sqrt();
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(p, &(x, y))| {
            let sixth: Vec<f64> = diffs.iter().map(|d| (d[p] as f64).powi(6)).collect();
            let (m6, m6_stderr) = mean_stderr(&sixth);
            let rhs = moment_rhs(n, x.abs_diff(y));
            let tails = eps
                .iter()
                .map(|&e| {
                    let hits = diffs.iter().filter(|d| (d[p] as f64).abs() / sqrt_n > e).count();
                    let prob = hits as f64 / samples as f64;
                    TailRecord { eps: e, prob, stderr: (prob * (1.0 - prob) / samples as f64).sqrt() }
                })
                .collect();
            MomentRecord { n, x, y, m6, m6_stderr, rhs, ratio: m6 / rhs, tails }
        })
        .collect())
}
