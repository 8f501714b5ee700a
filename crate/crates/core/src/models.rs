//! Reference chains used throughout the tests and the harness.

use crate::chain::{build_chain, MarkovShift};
use crate::linalg::Matrix;
use crate::scalar::Real;

fn iid<T: Real>(probs: &[f64], phi: &[i64]) -> MarkovShift<T> {
    let n = probs.len();
    let p = Matrix::from_fn(n, n, |_, j| T::lit(probs[j]));
    build_chain(p, phi.to_vec()).expect("reference chain is valid")
}

/// Increments −1, 0, +1 with probabilities 1/4, 1/2, 1/4, iid.
pub fn lazy_walk<T: Real>() -> MarkovShift<T> {
    iid(&[0.25, 0.5, 0.25], &[-1, 0, 1])
}

/// Lazy walk with doubled increments (lattice span 2).
pub fn doubled_lazy_walk<T: Real>() -> MarkovShift<T> {
    iid(&[0.25, 0.5, 0.25], &[-2, 0, 2])
}

/// Fair ±1 coin-flip walk (period 2 in the lattice sense).
pub fn coin_walk<T: Real>() -> MarkovShift<T> {
    iid(&[0.5, 0.5], &[1, -1])
}

/// Two states flipping with probability `p`, observable ±1.
pub fn flip_chain<T: Real>(p: f64) -> MarkovShift<T> {
    let m = Matrix::from_rows(&[vec![T::lit(1.0 - p), T::lit(p)], vec![T::lit(p), T::lit(1.0 - p)]]).expect("square");
    build_chain(m, vec![1, -1]).expect("valid for 0 < p < 1")
}

/// `P = r·I + (1−r)/3·J` on three states with `φ = (−1, 0, 1)`.
///
/// `φ` is an eigenvector of `P` with eigenvalue `r`, so the increments have
/// lag-k correlation `r^k` and `σ² = (2/3)·(1 + r)/(1 − r)`.
pub fn correlated_three_state<T: Real>(r: f64) -> MarkovShift<T> {
    let q = (1.0 - r) / 3.0;
    let m = Matrix::from_fn(3, 3, |i, j| T::lit(if i == j { r + q } else { q }));
    build_chain(m, vec![-1, 0, 1]).expect("valid for -1/2 <= r < 1")
}

/// Member of [`correlated_three_state`] with the requested `σ²`, if any.
pub fn three_state_with_variance<T: Real>(sigma2: f64) -> Option<MarkovShift<T>> {
    let k = 1.5 * sigma2;
    let r = (k - 1.0) / (k + 1.0);
    (-0.5..1.0).contains(&r).then(|| correlated_three_state(r))
}

/// Non-reversible doubly stochastic rotation-biased chain, `φ = (−1, 0, 1)`.
pub fn cyclic_three_state<T: Real>() -> MarkovShift<T> {
    let rows = [[0.2, 0.5, 0.3], [0.3, 0.2, 0.5], [0.5, 0.3, 0.2]];
    let m = Matrix::from_fn(3, 3, |i, j| T::lit(rows[i][j]));
    build_chain(m, vec![-1, 0, 1]).expect("valid")
}

/// Reversible four-state chain with a non-uniform stationary law.
///
/// `π = (1/6, 1/3, 1/3, 1/6)`; `φ = (−2, −1, 1, 2)` has mean zero.
pub fn skewed_four_state<T: Real>() -> MarkovShift<T> {
    let rows = [[0.2, 0.4, 0.3, 0.1], [0.2, 0.3, 0.35, 0.15], [0.15, 0.35, 0.3, 0.2], [0.1, 0.3, 0.4, 0.2]];
    let m = Matrix::from_fn(4, 4, |i, j| T::lit(rows[i][j]));
    build_chain(m, vec![-2, -1, 1, 2]).expect("valid")
}
