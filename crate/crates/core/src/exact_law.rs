//! Exact law of `(S_n, X_n)` by forward dynamic programming, its Fourier
//! inversion through the twisted operators, and the single-time estimates
//! built on top of it.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::MarkovShift;
use crate::export::{self, ExportError};
use crate::linalg::Matrix;
use crate::scalar::{sorted_sum, Real, C};
use crate::spectral::{self, phase, SpectralError};

pub const DEFAULT_MEMORY_CAP: usize = 100_000_000;
/// Probabilities below this are flushed to zero after every step.
pub const FLUSH_BELOW: f64 = 1e-300;
pub const INVERSION_TOL: f64 = 1e-8;
const PARALLEL_CELLS: usize = 1 << 13;
/// Levels per block in [`inversion_discrepancies`].
const BLOCK: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactLawError {
    #[error("law table needs {cells} cells, above the cap of {cap}")]
    MemoryCap { cells: usize, cap: usize },
    #[error("inversion at x = {x} gives {inversion:e}, dynamic programming gives {exact:e} (grid of {points})")]
    GridTooCoarse { x: i64, exact: f64, inversion: f64, points: usize },
    #[error("step count must be at least 1")]
    ZeroSteps,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// `P(S_n = x, X_n = s)` under the stationary start, `x ∈ [n·min φ, n·max φ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactLaw<T> {
    pub n: usize,
    pub support_min: i64,
    pub support_max: i64,
    states: usize,
    table: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawRow {
    pub x: i64,
    pub state: String,
    pub prob: f64,
}

impl<T: Real> ExactLaw<T> {
    pub fn states(&self) -> usize {
        self.states
    }

    pub fn prob(&self, x: i64, s: usize) -> T {
        if x < self.support_min || x > self.support_max {
            return T::zero();
        }
        self.table[(x - self.support_min) as usize * self.states + s]
    }

    /// `P(S_n = x)`, summed in sorted order.
    pub fn marginal(&self, x: i64) -> T {
        if x < self.support_min || x > self.support_max {
            return T::zero();
        }
        let i = (x - self.support_min) as usize * self.states;
        let mut cell = self.table[i..i + self.states].to_vec();
        sorted_sum(&mut cell)
    }

    /// `P(S_n = x)` for `x = support_min..=support_max`.
    pub fn marginals(&self) -> Vec<T> {
        let mut buf = vec![T::zero(); self.states];
        self.table
            .chunks_exact(self.states)
            .map(|c| {
                buf.copy_from_slice(c);
                sorted_sum(&mut buf)
            })
            .collect()
    }

    pub fn total_mass(&self) -> T {
        self.table.iter().copied().sum()
    }

    /// `P(X_n = s)`.
    pub fn state_marginal(&self, s: usize) -> T {
        self.table.iter().skip(s).step_by(self.states).copied().sum()
    }

    pub fn mean(&self) -> T {
        self.marginals().iter().enumerate().map(|(i, &p)| p * T::lit((self.support_min + i as i64) as f64)).sum()
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        let second: T = self
            .marginals()
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let x = T::lit((self.support_min + i as i64) as f64);
                p * x * x
            })
            .sum();
        second - m * m
    }

    /// `max_x √n·P(S_n = x)`.
    pub fn max_scaled(&self) -> T {
        let r = T::lit(self.n as f64).sqrt();
        self.marginals().into_iter().fold(T::zero(), T::max) * r
    }

    pub fn rows(&self, labels: &[String]) -> Vec<LawRow> {
        (self.support_min..=self.support_max)
            .flat_map(|x| {
                (0..self.states).map(move |s| LawRow { x, state: labels[s].clone(), prob: self.prob(x, s).as_f64() })
            })
            .collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, labels: &[String]) -> Result<(), ExportError> {
        export::write_csv(path, self.rows(labels))
    }
}

/// Forward recursion `μ_{k+1}(x + φ(s'), s') = Σ_s μ_k(x, s)·P(s, s')`
/// started from `μ_0(0, s) = π(s)`, advanced one step at a time.
#[derive(Debug, Clone)]
pub struct LawStepper<T> {
    phi: Vec<i64>,
    transition: Matrix<T>,
    law: ExactLaw<T>,
    next: Vec<T>,
    cap: usize,
    phi_min: i64,
    phi_max: i64,
}

impl<T: Real> LawStepper<T> {
    pub fn new(shift: &MarkovShift<T>) -> Self {
        Self::with_cap(shift, DEFAULT_MEMORY_CAP)
    }

    pub fn with_cap(shift: &MarkovShift<T>, cap: usize) -> Self {
        let law =
            ExactLaw { n: 0, support_min: 0, support_max: 0, states: shift.len(), table: shift.stationary().to_vec() };
        Self {
            phi: shift.observable().to_vec(),
            transition: shift.transition().clone(),
            law,
            next: Vec::new(),
            cap,
            phi_min: shift.phi_min(),
            phi_max: shift.phi_max(),
        }
    }

    pub fn n(&self) -> usize {
        self.law.n
    }

    pub fn law(&self) -> &ExactLaw<T> {
        &self.law
    }

    pub fn into_law(self) -> ExactLaw<T> {
        self.law
    }

    /// Table size at step `n`.
    pub fn cells_at(&self, n: usize) -> usize {
        ((self.phi_max - self.phi_min) as usize * n + 1) * self.law.states
    }

    pub fn step(&mut self) -> Result<(), ExactLawError> {
        let s_count = self.law.states;
        let cells = self.cells_at(self.law.n + 1);
        if cells > self.cap {
            return Err(ExactLawError::MemoryCap { cells, cap: self.cap });
        }
        let lo = self.law.support_min;
        let hi = self.law.support_max;
        let new_lo = lo + self.phi_min;
        self.next.clear();
        self.next.resize(cells, T::zero());
        let prev = &self.law.table;
        let phi = &self.phi;
        let p = &self.transition;
        let flush = T::lit(FLUSH_BELOW);
        let fill = |buf: &mut Vec<T>, (i, out): (usize, &mut [T])| {
            let xn = new_lo + i as i64;
            for (s2, o) in out.iter_mut().enumerate() {
                let x = xn - phi[s2];
                if x < lo || x > hi {
                    *o = T::zero();
                    continue;
                }
                let row = &prev[(x - lo) as usize * s_count..(x - lo + 1) as usize * s_count];
                for (s, b) in buf.iter_mut().enumerate() {
                    *b = row[s] * p[(s, s2)];
                }
                let v = sorted_sum(buf);
                *o = if v < flush { T::zero() } else { v };
            }
        };
        if cells >= PARALLEL_CELLS {
            self.next.par_chunks_mut(s_count).enumerate().for_each_init(|| vec![T::zero(); s_count], fill);
        } else {
            let mut buf = vec![T::zero(); s_count];
            self.next.chunks_mut(s_count).enumerate().for_each(|item| fill(&mut buf, item));
        }
        std::mem::swap(&mut self.law.table, &mut self.next);
        self.law.n += 1;
        self.law.support_min = new_lo;
        self.law.support_max = hi + self.phi_max;
        Ok(())
    }

    pub fn advance_to(&mut self, n: usize) -> Result<&ExactLaw<T>, ExactLawError> {
        if self.cells_at(n) > self.cap {
            return Err(ExactLawError::MemoryCap { cells: self.cells_at(n), cap: self.cap });
        }
        while self.law.n < n {
            self.step()?;
        }
        Ok(&self.law)
    }
}

pub fn exact_law<T: Real>(shift: &MarkovShift<T>, n: usize) -> Result<ExactLaw<T>, ExactLawError> {
    exact_law_with_cap(shift, n, DEFAULT_MEMORY_CAP)
}

pub fn exact_law_with_cap<T: Real>(shift: &MarkovShift<T>, n: usize, cap: usize) -> Result<ExactLaw<T>, ExactLawError> {
    if n == 0 {
        return Err(ExactLawError::ZeroSteps);
    }
    let mut st = LawStepper::with_cap(shift, cap);
    st.advance_to(n)?;
    Ok(st.into_law())
}

/// Default trapezoid grid size for step `n`: `max(1024, 8·width)`.
pub fn inversion_points<T: Real>(shift: &MarkovShift<T>, n: usize) -> usize {
    let width = (shift.phi_max() - shift.phi_min()) as usize * n + 1;
    (8 * width).max(1024)
}

/// `m(P_t^n·1)`, the characteristic function of `S_n`.
pub fn characteristic_function<T: Real>(shift: &MarkovShift<T>, n: usize, t: T) -> C<T> {
    let op = spectral::twisted_operator(shift, t);
    let mut f = vec![C::new(T::one(), T::zero()); shift.len()];
    let mut g = f.clone();
    for _ in 0..n {
        op.entries.mul_vec_into(&f, &mut g);
        std::mem::swap(&mut f, &mut g);
    }
    shift.stationary().iter().zip(&f).fold(C::new(T::zero(), T::zero()), |a, (&p, &v)| a + v * p)
}

/// `P(S_n = x)` for every `x` in the support, by the trapezoid rule on
/// `points` nodes `t_j = −π + 2πj/points`.
pub fn inversion_marginals<T: Real>(shift: &MarkovShift<T>, n: usize, points: usize) -> Vec<T> {
    let lo = shift.phi_min() * n as i64;
    let hi = shift.phi_max() * n as i64;
    let ts: Vec<T> = (0..points).map(|j| -T::PI() + T::TAU() * T::lit(j as f64) / T::lit(points as f64)).collect();
    let cf: Vec<C<T>> = ts.par_iter().map(|&t| characteristic_function(shift, n, t)).collect();
    let m = T::lit(points as f64);
    (lo..=hi)
        .into_par_iter()
        .map(|x| {
            let s: T = ts.iter().zip(&cf).map(|(&t, &c)| (c * phase(-t, x)).re).sum();
            s / m
        })
        .collect()
}

/// Fourier inversion of `P(S_n = x)` at a single level.
pub fn inversion_probability<T: Real>(shift: &MarkovShift<T>, n: usize, x: i64, points: usize) -> T {
    let m = T::lit(points as f64);
    let s: T = (0..points)
        .into_par_iter()
        .map(|j| {
            let t = -T::PI() + T::TAU() * T::lit(j as f64) / m;
            (characteristic_function(shift, n, t) * phase(-t, x)).re
        })
        .collect::<Vec<T>>()
        .into_iter()
        .sum();
    s / m
}

/// `P(S_n = x)` by Fourier inversion, checked against the dynamic program;
/// one retry at 4× grid density before [`ExactLawError::GridTooCoarse`].
pub fn law_via_inversion<T: Real>(shift: &MarkovShift<T>, n: usize, x: i64) -> Result<T, ExactLawError> {
    let exact = exact_law(shift, n)?.marginal(x);
    let tol = T::tol(INVERSION_TOL);
    let mut points = inversion_points(shift, n);
    let mut value = inversion_probability(shift, n, x, points);
    if (value - exact).abs() > tol {
        points *= 4;
        value = inversion_probability(shift, n, x, points);
    }
    if (value - exact).abs() > tol {
        return Err(ExactLawError::GridTooCoarse { x, exact: exact.as_f64(), inversion: value.as_f64(), points });
    }
    Ok(value)
}

/// Largest `|DP − inversion|` over the whole support at step `n`.
pub fn inversion_discrepancy<T: Real>(law: &ExactLaw<T>, shift: &MarkovShift<T>) -> T {
    let inv = inversion_marginals(shift, law.n, inversion_points(shift, law.n));
    law.marginals().iter().zip(&inv).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max)
}

/// `max_x |DP − inversion|` for every `n = 1..=n_max`.
///
/// All steps share one trapezoid grid, sized for `n_max`, and the
/// vectors `P_t^n·1` are advanced one step at a time alongside the dynamic
/// program, so the sweep costs about as much as the largest single check.
pub fn inversion_discrepancies<T: Real>(shift: &MarkovShift<T>, n_max: usize) -> Result<Vec<T>, ExactLawError> {
    if n_max == 0 {
        return Err(ExactLawError::ZeroSteps);
    }
    let points = inversion_points(shift, n_max);
    let m = T::lit(points as f64);
    let ts: Vec<T> = (0..points).map(|j| -T::PI() + T::TAU() * T::lit(j as f64) / m).collect();
    let ops: Vec<_> = ts.iter().map(|&t| spectral::twisted_operator(shift, t)).collect();
    let back: Vec<C<T>> = ts.iter().map(|&t| phase(-t, 1)).collect();
    let pi = shift.stationary();
    let one = C::new(T::one(), T::zero());
    let mut vecs = vec![vec![one; shift.len()]; points];
    let mut st = LawStepper::new(shift);
    let mut out = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        st.step()?;
        let cf: Vec<C<T>> = vecs
            .par_iter_mut()
            .zip(&ops)
            .map(|(f, op)| {
                *f = op.apply(f);
                pi.iter().zip(f.iter()).fold(C::new(T::zero(), T::zero()), |a, (&p, &v)| a + v * p)
            })
            .collect();
        let law = st.law();
        let lo = law.support_min;
        // e^{−itx} along a block of levels by repeated rotation, starting
        // from an exact phase at the first level of the block.
        let worst = law
            .marginals()
            .par_chunks(BLOCK)
            .enumerate()
            .map(|(b, exact)| {
                let x0 = lo + (b * BLOCK) as i64;
                let mut z: Vec<C<T>> = ts.iter().map(|&t| phase(-t, x0)).collect();
                let mut worst = T::zero();
                for &e in exact {
                    let mut s = T::zero();
                    for ((zj, &c), &w) in z.iter_mut().zip(&cf).zip(&back) {
                        s += (c * *zj).re;
                        *zj *= w;
                    }
                    worst = worst.max((s / m - e).abs());
                }
                worst
            })
            .reduce(T::zero, T::max);
        out.push(worst);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalLimitRow {
    pub n: usize,
    pub x: i64,
    pub sqrtn_prob: f64,
    pub gaussian_pred: f64,
}

/// `√n·P(S_n = x)` next to `exp(−x²/(2nσ²))/√(2πσ²)`.
///
/// Does not certify aperiodicity itself; on periodic chains the values
/// show the parity zeros the local limit theorem excludes.
pub fn local_limit_scan<T: Real>(
    shift: &MarkovShift<T>,
    n_list: &[usize],
    x_list: &[i64],
) -> Result<Vec<LocalLimitRow>, ExactLawError> {
    let sigma2 = spectral::asymptotic_variance(shift)?.as_f64();
    let mut st = LawStepper::new(shift);
    let mut out = Vec::with_capacity(n_list.len() * x_list.len());
    for &n in n_list {
        if n == 0 {
            return Err(ExactLawError::ZeroSteps);
        }
        let law = st.advance_to(n)?;
        let r = (n as f64).sqrt();
        for &x in x_list {
            let xf = x as f64;
            out.push(LocalLimitRow {
                n,
                x,
                sqrtn_prob: r * law.marginal(x).as_f64(),
                gaussian_pred: (-xf * xf / (2.0 * n as f64 * sigma2)).exp() / (std::f64::consts::TAU * sigma2).sqrt(),
            });
        }
    }
    Ok(out)
}

/// Partial sums `Σ_{n=1}^{N} |P(S_n=x) − P(S_n=y)|`, `N = 1..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCurve<T> {
    pub x: i64,
    pub y: i64,
    pub partial_sums: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    #[serde(rename = "N")]
    pub horizon: usize,
    pub partial_sum: f64,
}

impl<T: Real> KernelCurve<T> {
    /// Partial sum up to `N` (1-based).
    pub fn at(&self, horizon: usize) -> T {
        self.partial_sums[horizon - 1]
    }

    pub fn last(&self) -> T {
        *self.partial_sums.last().expect("horizon >= 1")
    }

    pub fn rows(&self) -> Vec<KernelRow> {
        self.partial_sums
            .iter()
            .enumerate()
            .map(|(i, v)| KernelRow { horizon: i + 1, partial_sum: v.as_f64() })
            .collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), ExportError> {
        export::write_csv(path, self.rows())
    }
}

pub fn potential_kernel<T: Real>(
    shift: &MarkovShift<T>,
    horizon: usize,
    x: i64,
    y: i64,
) -> Result<KernelCurve<T>, ExactLawError> {
    Ok(potential_kernels(shift, horizon, &[(x, y)])?.remove(0))
}

/// Several kernel curves from one incremental pass of the recursion.
pub fn potential_kernels<T: Real>(
    shift: &MarkovShift<T>,
    horizon: usize,
    pairs: &[(i64, i64)],
) -> Result<Vec<KernelCurve<T>>, ExactLawError> {
    if horizon == 0 {
        return Err(ExactLawError::ZeroSteps);
    }
    let mut st = LawStepper::new(shift);
    let cells = st.cells_at(horizon);
    if cells > st.cap {
        return Err(ExactLawError::MemoryCap { cells, cap: st.cap });
    }
    let mut curves: Vec<KernelCurve<T>> =
        pairs.iter().map(|&(x, y)| KernelCurve { x, y, partial_sums: Vec::with_capacity(horizon) }).collect();
    let mut acc = vec![T::zero(); pairs.len()];
    for _ in 0..horizon {
        st.step()?;
        let law = st.law();
        for ((c, a), &(x, y)) in curves.iter_mut().zip(acc.iter_mut()).zip(pairs) {
            if x != y {
                *a += (law.marginal(x) - law.marginal(y)).abs();
            }
            c.partial_sums.push(*a);
        }
    }
    Ok(curves)
}

/// `Var(S_n)/n` at each `n` of `ns` (increasing), from the exact law.
pub fn variance_ratios<T: Real>(shift: &MarkovShift<T>, ns: &[usize]) -> Result<Vec<T>, ExactLawError> {
    let mut st = LawStepper::new(shift);
    ns.iter().map(|&n| Ok(st.advance_to(n)?.variance() / T::lit(n as f64))).collect()
}

/// `σ²` from `V(n) = Var(S_n)/n` at `n = 512, 1024`. `V(n) = σ² − c/n` up to
/// a geometrically small term, so `2·V(2n) − V(n)` removes the bias.
pub fn extrapolated_variance<T: Real>(shift: &MarkovShift<T>) -> Result<T, ExactLawError> {
    let v = variance_ratios(shift, &[512, 1024])?;
    Ok(T::lit(2.0) * v[1] - v[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn lazy_walk_small_laws() {
        let s = models::lazy_walk::<f64>();
        let l1 = exact_law(&s, 1).unwrap();
        assert_eq!(l1.marginal(0), 0.5);
        assert_eq!(l1.marginal(1), 0.25);
        assert_eq!(l1.marginal(-1), 0.25);
        let l2 = exact_law(&s, 2).unwrap();
        assert_eq!(l2.marginal(0), 0.375);
        assert_eq!(l2.total_mass(), 1.0);
    }

    #[test]
    fn inversion_two_steps() {
        let s = models::lazy_walk::<f64>();
        assert!((law_via_inversion(&s, 2, 0).unwrap() - 0.375).abs() < 1e-12);
        assert!(law_via_inversion(&s, 1, 5).unwrap().abs() < 1e-12);
    }

    #[test]
    fn memory_cap_is_enforced() {
        let s = models::lazy_walk::<f64>();
        assert!(matches!(exact_law_with_cap(&s, 100, 300), Err(ExactLawError::MemoryCap { .. })));
        assert!(exact_law_with_cap(&s, 49, 300).is_ok());
    }

    #[test]
    fn state_marginals_are_stationary() {
        let s = models::cyclic_three_state::<f64>();
        let l = exact_law(&s, 40).unwrap();
        for k in 0..3 {
            assert!((l.state_marginal(k) - s.stationary()[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_trivial_cases() {
        let s = models::lazy_walk::<f64>();
        let c = potential_kernels(&s, 50, &[(3, 3), (1, -1)]).unwrap();
        assert!(c.iter().all(|k| k.partial_sums.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn coin_walk_parity() {
        let s = models::coin_walk::<f64>();
        let rows = local_limit_scan(&s, &[9, 11], &[0]).unwrap();
        assert!(rows.iter().all(|r| r.sqrtn_prob == 0.0));
    }
}
