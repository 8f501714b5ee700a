//! Finite-state Markov shifts carrying an integer observable.
//!
//! A [`MarkovShift`] is the shift on sequences of a finite, irreducible and
//! aperiodic chain started from its stationary law, together with a
//! symbol-local observable `φ: states → ℤ` of stationary mean zero. Because
//! `φ` depends only on the current symbol it is constant on partition cells,
//! so it is automatically Lipschitz.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::linalg::{solve, Matrix};
use crate::scalar::{sorted_sum, Real};

pub const ROW_SUM_TOL: f64 = 1e-12;
pub const STATIONARY_TOL: f64 = 1e-12;
pub const MEAN_TOL: f64 = 1e-10;
pub const POWER_ITERATION_TOL: f64 = 1e-14;
pub const POWER_ITERATION_MAX: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("transition matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("observable has {got} entries but the chain has {expected} states")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("chain has no states")]
    Empty,
    #[error("row {row} is not a probability vector: {reason}")]
    NotStochastic { row: usize, reason: String },
    #[error("chain is not mixing: {0}")]
    NotMixing(MixingFailure),
    #[error("stationary mean of the observable is {mean:e}, expected 0")]
    MeanNotZero { mean: f64 },
    #[error("observable is identically zero")]
    DegenerateObservable,
    #[error("stationary vector failed verification (residual {residual:e})")]
    StationaryFailed { residual: f64 },
    #[error("chain file {location}: {message}")]
    Parse { location: String, message: String },
    #[error("reading chain file: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MixingFailure {
    /// No path from `from` to `to` in the transition graph.
    Reducible { from: usize, to: usize },
    /// Irreducible, but every cycle length is a multiple of `period`.
    Periodic { period: usize },
}

impl std::fmt::Display for MixingFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MixingFailure::Reducible { from, to } => write!(f, "state {to} is unreachable from state {from}"),
            MixingFailure::Periodic { period } => write!(f, "transition graph has period {period}"),
        }
    }
}

/// Validated finite Markov shift with an integer observable.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovShift<T> {
    states: Vec<String>,
    transition: Matrix<T>,
    stationary: Vec<T>,
    observable: Vec<i64>,
}

impl<T: Real> MarkovShift<T> {
    #[inline]
    pub fn len(&self) -> usize {
        self.observable.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.observable.is_empty()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn transition(&self) -> &Matrix<T> {
        &self.transition
    }

    pub fn stationary(&self) -> &[T] {
        &self.stationary
    }

    pub fn observable(&self) -> &[i64] {
        &self.observable
    }

    pub fn phi_min(&self) -> i64 {
        *self.observable.iter().min().expect("nonempty")
    }

    pub fn phi_max(&self) -> i64 {
        *self.observable.iter().max().expect("nonempty")
    }

    /// `Σ π(s)·φ(s)`.
    pub fn mean(&self) -> T {
        self.stationary.iter().zip(&self.observable).map(|(&p, &f)| p * T::lit(f as f64)).sum()
    }

    /// `m(f) = Σ π(s)·f(s)`.
    pub fn integrate(&self, f: &[T]) -> T {
        self.stationary.iter().zip(f).map(|(&p, &v)| p * v).sum()
    }

    /// True when all rows are identical, i.e. the increments are iid.
    pub fn is_iid(&self) -> bool {
        let first = self.transition.row(0);
        (1..self.len()).all(|i| self.transition.row(i) == first)
    }

    /// Replace the default `s0, s1, …` labels.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, ChainError> {
        if labels.len() != self.len() {
            return Err(ChainError::DimensionMismatch { expected: self.len(), got: labels.len() });
        }
        self.states = labels;
        Ok(self)
    }

    /// The same chain with a different observable.
    pub fn with_observable(&self, observable: Vec<i64>) -> Result<Self, ChainError> {
        build_chain(self.transition.clone(), observable).and_then(|s| s.with_labels(self.states.clone()))
    }

    pub fn to_spec(&self) -> ChainSpec {
        ChainSpec {
            states: self.states.clone(),
            transition: (0..self.len()).map(|i| self.transition.row(i).iter().map(|v| v.as_f64()).collect()).collect(),
            observable: self.observable.clone(),
        }
    }
}

/// Validate a transition matrix and observable into a [`MarkovShift`].
pub fn build_chain<T: Real>(transition: Matrix<T>, observable: Vec<i64>) -> Result<MarkovShift<T>, ChainError> {
    check_stochastic(&transition)?;
    if observable.len() != transition.rows() {
        return Err(ChainError::DimensionMismatch { expected: transition.rows(), got: observable.len() });
    }
    let stationary = stationary_distribution(&transition)?;
    if observable.iter().all(|&v| v == 0) {
        return Err(ChainError::DegenerateObservable);
    }
    let states = (0..transition.rows()).map(|i| format!("s{i}")).collect();
    let shift = MarkovShift { states, transition, stationary, observable };
    let mean = shift.mean();
    if mean.abs() > T::tol(MEAN_TOL) {
        return Err(ChainError::MeanNotZero { mean: mean.as_f64() });
    }
    Ok(shift)
}

fn check_stochastic<T: Real>(p: &Matrix<T>) -> Result<(), ChainError> {
    if p.rows() == 0 {
        return Err(ChainError::Empty);
    }
    if p.rows() != p.cols() {
        return Err(ChainError::NotSquare { rows: p.rows(), cols: p.cols() });
    }
    for i in 0..p.rows() {
        let row = p.row(i);
        if let Some((j, v)) = row.iter().enumerate().find(|(_, v)| !(**v >= T::zero()) || !v.is_finite()) {
            return Err(ChainError::NotStochastic { row: i, reason: format!("entry {j} is {v}") });
        }
        let s: T = row.iter().copied().sum();
        if (s - T::one()).abs() > T::tol(ROW_SUM_TOL) {
            return Err(ChainError::NotStochastic { row: i, reason: format!("entries sum to {s}") });
        }
    }
    Ok(())
}

/// Irreducibility and aperiodicity of the transition graph.
pub fn check_mixing<T: Real>(p: &Matrix<T>) -> Result<(), MixingFailure> {
    let n = p.rows();
    let reach = |forward: bool| -> Vec<Option<usize>> {
        let mut level = vec![None; n];
        level[0] = Some(0);
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                let w = if forward { p[(u, v)] } else { p[(v, u)] };
                if w > T::zero() && level[v].is_none() {
                    level[v] = Some(level[u].unwrap() + 1);
                    queue.push_back(v);
                }
            }
        }
        level
    };
    let fwd = reach(true);
    if let Some(to) = fwd.iter().position(Option::is_none) {
        return Err(MixingFailure::Reducible { from: 0, to });
    }
    if let Some(from) = reach(false).iter().position(Option::is_none) {
        return Err(MixingFailure::Reducible { from, to: 0 });
    }
    let mut period = 0usize;
    for u in 0..n {
        for v in 0..n {
            if p[(u, v)] > T::zero() {
                let (lu, lv) = (fwd[u].unwrap() as i64, fwd[v].unwrap() as i64);
                period = gcd(period, (lu + 1 - lv).unsigned_abs() as usize);
            }
        }
    }
    if period != 1 {
        return Err(MixingFailure::Periodic { period });
    }
    Ok(())
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Stationary law `π = π·P` of a mixing chain.
///
/// Left power iteration with accumulation in sorted order (so symmetric
/// chains give bitwise symmetric vectors); falls back to a direct solve of
/// `(Pᵀ − I)·π = 0, Σπ = 1` if the iteration stalls.
pub fn stationary_distribution<T: Real>(transition: &Matrix<T>) -> Result<Vec<T>, ChainError> {
    check_stochastic(transition)?;
    check_mixing(transition).map_err(ChainError::NotMixing)?;
    let n = transition.rows();
    let mut pi = vec![T::one() / T::lit(n as f64); n];
    let mut next = vec![T::zero(); n];
    let mut terms = vec![T::zero(); n];
    let tol = T::tol(POWER_ITERATION_TOL);
    let mut converged = false;
    for _ in 0..POWER_ITERATION_MAX {
        for (j, nj) in next.iter_mut().enumerate() {
            for (i, t) in terms.iter_mut().enumerate() {
                *t = pi[i] * transition[(i, j)];
            }
            *nj = sorted_sum(&mut terms);
        }
        terms.copy_from_slice(&next);
        let total = sorted_sum(&mut terms);
        let mut delta = T::zero();
        for (p, &q) in pi.iter_mut().zip(&next) {
            let q = q / total;
            delta = delta.max((q - *p).abs());
            *p = q;
        }
        if delta < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        pi = direct_stationary(transition)?;
    }
    let residual = stationary_residual(transition, &pi);
    if residual > T::tol(STATIONARY_TOL) || pi.iter().any(|&v| !(v > T::zero())) {
        return Err(ChainError::StationaryFailed { residual: residual.as_f64() });
    }
    Ok(pi)
}

fn direct_stationary<T: Real>(p: &Matrix<T>) -> Result<Vec<T>, ChainError> {
    let n = p.rows();
    let a = Matrix::from_fn(n, n, |i, j| {
        if i == n - 1 {
            T::one()
        } else if i == j {
            p[(j, i)] - T::one()
        } else {
            p[(j, i)]
        }
    });
    let mut b = vec![T::zero(); n];
    b[n - 1] = T::one();
    solve(&a, &b).map_err(|e| ChainError::StationaryFailed {
        residual: match e {
            crate::linalg::LinalgError::Singular { pivot, .. } => pivot,
            _ => f64::NAN,
        },
    })
}

/// `max_j |(π·P)_j − π_j|` plus `|Σπ − 1|`.
pub fn stationary_residual<T: Real>(p: &Matrix<T>, pi: &[T]) -> T {
    let n = p.rows();
    let mut worst = T::zero();
    for j in 0..n {
        let v: T = (0..n).map(|i| pi[i] * p[(i, j)]).sum();
        worst = worst.max((v - pi[j]).abs());
    }
    let total: T = pi.iter().copied().sum();
    worst + (total - T::one()).abs()
}

/// On-disk chain description.
///
/// ```json
/// { "states": ["down", "stay", "up"],
///   "transition": [[0.25, 0.5, 0.25], [0.25, 0.5, 0.25], [0.25, 0.5, 0.25]],
///   "observable": [-1, 0, 1] }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub states: Vec<String>,
    pub transition: Vec<Vec<f64>>,
    pub observable: Vec<i64>,
}

impl ChainSpec {
    /// Parse with errors that name the offending key, row and column.
    pub fn parse(text: &str) -> Result<Self, ChainError> {
        let perr = |location: &str, message: String| ChainError::Parse { location: location.to_string(), message };
        let value: Value = serde_json::from_str(text)
            .map_err(|e| perr(&format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        let obj = value.as_object().ok_or_else(|| perr("root", "expected a JSON object".into()))?;
        for key in obj.keys() {
            if !matches!(key.as_str(), "states" | "transition" | "observable") {
                return Err(perr(key, "unknown key".into()));
            }
        }
        let get = |key: &str| obj.get(key).ok_or_else(|| perr(key, "missing key".into()));
        let states = get("states")?
            .as_array()
            .ok_or_else(|| perr("states", "expected an array of strings".into()))?
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.as_str().map(str::to_string).ok_or_else(|| perr(&format!("states[{i}]"), "expected a string".into()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let rows =
            get("transition")?.as_array().ok_or_else(|| perr("transition", "expected an array of rows".into()))?;
        let mut transition = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let row = row
                .as_array()
                .ok_or_else(|| perr(&format!("transition[{i}]"), "expected an array of numbers".into()))?;
            if row.len() != states.len() {
                return Err(perr(
                    &format!("transition[{i}]"),
                    format!("row has {} entries, expected {}", row.len(), states.len()),
                ));
            }
            let parsed = row
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    v.as_f64().ok_or_else(|| perr(&format!("transition[{i}][{j}]"), "expected a number".into()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            transition.push(parsed);
        }
        if transition.len() != states.len() {
            return Err(perr("transition", format!("{} rows for {} states", transition.len(), states.len())));
        }
        let observable = get("observable")?
            .as_array()
            .ok_or_else(|| perr("observable", "expected an array of integers".into()))?
            .iter()
            .enumerate()
            .map(|(i, v)| v.as_i64().ok_or_else(|| perr(&format!("observable[{i}]"), "expected an integer".into())))
            .collect::<Result<Vec<_>, _>>()?;
        if observable.len() != states.len() {
            return Err(perr("observable", format!("{} values for {} states", observable.len(), states.len())));
        }
        Ok(Self { states, transition, observable })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ChainError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ChainError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    pub fn build<T: Real>(&self) -> Result<MarkovShift<T>, ChainError> {
        let rows: Vec<Vec<T>> = self.transition.iter().map(|r| r.iter().map(|&v| T::lit(v)).collect()).collect();
        let m = Matrix::from_rows(&rows)
            .map_err(|e| ChainError::Parse { location: "transition".into(), message: e.to_string() })?;
        build_chain(m, self.observable.clone())?.with_labels(self.states.clone())
    }
}
