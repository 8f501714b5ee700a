//! Transfer operator, twisted operators `P_t f = Q(e^{itφ}f)` and the
//! leading eigenbranch `(λ_t, v_t)`.
//!
//! Variance convention: `σ² = lim Var(S_n)/n = −λ''(0)`, so that
//! `λ_t = 1 − σ²t²/2 + o(t²)`.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::MarkovShift;
use crate::export::{self, ExportError};
use crate::linalg::{eigenvalues, solve, LinalgError, Lu, Matrix};
use crate::scalar::{Real, C};

/// Two eigenvalues closer than this are indistinguishable to the branch.
pub const AMBIGUITY_TOL: f64 = 1e-10;
/// Below this modulus the branch may sit in a (possibly defective) cluster
/// of near-zero eigenvalues; its argument is meaningless there and
/// collisions are not reported.
pub const AMBIGUITY_FLOOR: f64 = 1e-6;
pub const NORMALIZATION_FLOOR: f64 = 1e-8;
pub const APERIODICITY_GAP: f64 = 1e-8;
pub const REFINE_BELOW: f64 = 1e-4;
/// Base step of the numeric `λ''(0)`.
pub const SECOND_DIFFERENCE_STEP: f64 = 1e-3;
pub const VARIANCE_FLOOR: f64 = 1e-12;
const INVERSE_ITERATION_MAX: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("eigenvalues {lambda} and {other} of P_t at t = {t} cannot be told apart")]
    BranchAmbiguity { t: f64, lambda: String, other: String },
    #[error("inverse iteration did not converge at t = {t} (residual {residual:e})")]
    NoConvergence { t: f64, residual: f64 },
    #[error("m(v_t) vanishes at t = {t}; the branch cannot be normalized")]
    NormalizationVanishes { t: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("asymptotic variance {sigma2:e} is zero: the observable is a coboundary")]
    VarianceZero { sigma2: f64 },
    #[error("variance routes disagree: Green-Kubo {green_kubo}, -lambda''(0) {numeric}")]
    ConventionMismatch { green_kubo: f64, numeric: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `Q(y,x) = π(x)·P(x,y)/π(y)`, the transfer operator acting on functions.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix<T> {
    pub entries: Matrix<T>,
}

pub fn transfer_matrix<T: Real>(shift: &MarkovShift<T>) -> TransferMatrix<T> {
    let pi = shift.stationary();
    let p = shift.transition();
    TransferMatrix { entries: Matrix::from_fn(shift.len(), shift.len(), |y, x| pi[x] * p[(x, y)] / pi[y]) }
}

impl<T: Real> TransferMatrix<T> {
    pub fn apply(&self, f: &[T]) -> Vec<T> {
        self.entries.mul_vec(f)
    }
}

/// `P_t(y,x) = Q(y,x)·e^{itφ(x)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistedOperator<T> {
    pub t: T,
    pub entries: Matrix<C<T>>,
}

/// `e^{itφ}` for integer `φ`, with `t` reduced modulo `2π` first so that
/// `t ∈ 2πℤ` gives exactly 1.
pub fn phase<T: Real>(t: T, phi: i64) -> C<T> {
    let two_pi = T::TAU();
    let r = t - two_pi * (t / two_pi).round();
    let a = r * T::lit(phi as f64);
    C::new(a.cos(), a.sin())
}

pub fn twisted_operator<T: Real>(shift: &MarkovShift<T>, t: T) -> TwistedOperator<T> {
    twist(&transfer_matrix(shift), shift.observable(), t)
}

fn twist<T: Real>(q: &TransferMatrix<T>, phi: &[i64], t: T) -> TwistedOperator<T> {
    let w: Vec<C<T>> = phi.iter().map(|&f| phase(t, f)).collect();
    let n = phi.len();
    TwistedOperator { t, entries: Matrix::from_fn(n, n, |y, x| w[x] * q.entries[(y, x)]) }
}

impl<T: Real> TwistedOperator<T> {
    pub fn apply(&self, f: &[C<T>]) -> Vec<C<T>> {
        self.entries.mul_vec(f)
    }

    /// Max row sum of moduli.
    pub fn norm(&self) -> T {
        self.entries.norm_inf()
    }

    /// Largest eigenvalue modulus.
    pub fn spectral_radius(&self) -> Result<T, LinalgError> {
        Ok(eigenvalues(&self.entries)?.iter().map(|z| z.norm()).fold(T::zero(), T::max))
    }
}

/// `m(f) = Σ π(s) f(s)` for complex `f`.
fn integrate<T: Real>(pi: &[T], f: &[C<T>]) -> C<T> {
    pi.iter().zip(f).fold(C::new(T::zero(), T::zero()), |acc, (&p, &v)| acc + v * p)
}

fn inf_norm<T: Real>(v: &[C<T>]) -> T {
    v.iter().map(|z| z.norm()).fold(T::zero(), T::max)
}

/// Eigenpair of `op` nearest the shift `mu`, by inverse iteration from `seed`.
///
/// Returns `(λ, v)` with `m(v) = 1` and `λ = m(P_t v)`.
fn inverse_iteration<T: Real>(
    op: &TwistedOperator<T>,
    pi: &[T],
    mu: C<T>,
    seed: &[C<T>],
) -> Result<(C<T>, Vec<C<T>>), SpectralError> {
    let (lambda, v) = converge(op, pi, mu, seed)?;
    Ok((lambda, normalize(pi, v, op.t)?))
}

/// Scale `v` so that `m(v) = 1`.
fn normalize<T: Real>(pi: &[T], mut v: Vec<C<T>>, t: T) -> Result<Vec<C<T>>, SpectralError> {
    let mv = integrate(pi, &v);
    if mv.norm() < T::lit(NORMALIZATION_FLOOR) {
        return Err(SpectralError::NormalizationVanishes { t: t.as_f64() });
    }
    for z in v.iter_mut() {
        *z /= mv;
    }
    Ok(v)
}

/// Inverse iteration proper; the eigenvector comes back with unit sup norm.
fn converge<T: Real>(
    op: &TwistedOperator<T>,
    pi: &[T],
    mu: C<T>,
    seed: &[C<T>],
) -> Result<(C<T>, Vec<C<T>>), SpectralError> {
    let n = pi.len();
    let t = op.t.as_f64();
    let tol = T::tol(1e-14);
    let factor = |mu: C<T>| -> Result<Lu<C<T>>, SpectralError> {
        let mut nudge = T::zero();
        for _ in 0..8 {
            let shifted = Matrix::from_fn(n, n, |i, j| {
                let d = if i == j { mu + C::new(nudge, nudge) } else { C::new(T::zero(), T::zero()) };
                op.entries[(i, j)] - d
            });
            match Lu::factor(&shifted) {
                Ok(lu) => return Ok(lu),
                Err(LinalgError::Singular { .. }) => {
                    nudge = if nudge == T::zero() { T::epsilon() * T::lit(16.0) } else { nudge * T::lit(16.0) };
                }
                Err(e) => return Err(e.into()),
            }
        }
        Err(SpectralError::NoConvergence { t, residual: f64::INFINITY })
    };
    let mut lu = factor(mu)?;
    let mut v = seed.to_vec();
    let mut lambda = mu;
    let mut residual = T::infinity();
    let mut refreshed = false;
    for _ in 0..INVERSE_ITERATION_MAX {
        let mut w = lu.solve(&v);
        let scale = inf_norm(&w);
        if !(scale > T::zero()) || !scale.is_finite() {
            return Err(SpectralError::NoConvergence { t, residual: f64::NAN });
        }
        for z in w.iter_mut() {
            *z /= scale;
        }
        let mv = integrate(pi, &w);
        let pw = op.apply(&w);
        let mpw = integrate(pi, &pw);
        // Rayleigh-type quotient; robust when m(w) is small relative to w.
        let num: C<T> = w.iter().zip(&pw).fold(C::new(T::zero(), T::zero()), |a, (x, y)| a + x.conj() * y);
        let den: T = w.iter().map(|x| x.norm_sqr()).sum();
        lambda = if mv.norm() > T::lit(NORMALIZATION_FLOOR) { mpw / mv } else { num / den };
        residual = pw.iter().zip(&w).map(|(a, b)| (*a - *b * lambda).norm()).fold(T::zero(), T::max);
        v = w;
        if residual <= tol {
            break;
        }
        // Once close, refactor at the current estimate to speed up convergence.
        if !refreshed && residual < T::lit(1e-6) && (lambda - mu).norm() > T::lit(1e-12) {
            lu = factor(lambda)?;
            refreshed = true;
        }
    }
    if residual > T::tol(1e-10) {
        return Err(SpectralError::NoConvergence { t, residual: residual.as_f64() });
    }
    Ok((lambda, v))
}

/// `|⟨a, b⟩|/(‖a‖‖b‖)`.
fn alignment<T: Real>(a: &[C<T>], b: &[C<T>]) -> T {
    let dot = a.iter().zip(b).fold(C::new(T::zero(), T::zero()), |s, (x, y)| s + x.conj() * *y);
    let na: T = a.iter().map(|z| z.norm_sqr()).sum();
    let nb: T = b.iter().map(|z| z.norm_sqr()).sum();
    dot.norm() / (na * nb).sqrt()
}

/// Eigenpairs tried when continuing the branch.
const CANDIDATES: usize = 3;

/// Continue the branch from the eigenvector `prev`: among the eigenvalues
/// of `op` nearest the predicted `mu`, take the one whose eigenvector is
/// best aligned with `prev`.
///
/// Plain inverse iteration from `mu` stalls when two eigenvalues are about
/// equally far from it, as happens right after a collision of `λ_t` with
/// the subdominant spectrum.
fn follow<T: Real>(
    op: &TwistedOperator<T>,
    pi: &[T],
    mu: C<T>,
    prev: &[C<T>],
) -> Result<(C<T>, Vec<C<T>>), SpectralError> {
    let mut eig = eigenvalues(&op.entries)?;
    eig.sort_by(|a, b| (*a - mu).norm().partial_cmp(&(*b - mu).norm()).unwrap());
    let mut best: Option<(T, C<T>, Vec<C<T>>)> = None;
    let mut failure = None;
    // The prediction itself goes first and wins ties: in a defective
    // cluster it resolves λ far better than a shift at a QR eigenvalue.
    let shifts = std::iter::once(mu).chain(eig.iter().copied().take(CANDIDATES));
    for e in shifts {
        match converge(op, pi, e, prev) {
            Ok((l, w)) => {
                let score = alignment(prev, &w);
                if best.as_ref().is_none_or(|b| score > b.0 + T::tol(1e-9)) {
                    best = Some((score, l, w));
                }
            }
            Err(err) => failure = Some(err),
        }
    }
    match best {
        Some((_, l, w)) => Ok((l, normalize(pi, w, op.t)?)),
        None => Err(failure.unwrap_or(SpectralError::NoConvergence { t: op.t.as_f64(), residual: f64::NAN })),
    }
}

/// Largest modulus among the eigenvalues of `op` other than the one closest
/// to `lambda`, plus the closest such competitor.
fn subdominant<T: Real>(op: &TwistedOperator<T>, lambda: C<T>) -> Result<(T, Option<C<T>>), SpectralError> {
    let mut eig = eigenvalues(&op.entries)?;
    if eig.is_empty() {
        return Ok((T::zero(), None));
    }
    let k = (0..eig.len())
        .min_by(|&a, &b| (eig[a] - lambda).norm().partial_cmp(&(eig[b] - lambda).norm()).unwrap())
        .unwrap();
    eig.swap_remove(k);
    let rho2 = eig.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    let nearest = eig.iter().copied().min_by(|a, b| (*a - lambda).norm().partial_cmp(&(*b - lambda).norm()).unwrap());
    Ok((rho2, nearest))
}

/// Continued leading eigendata of `P_t` over a grid containing 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBranch<T> {
    pub grid: Vec<T>,
    pub lambda: Vec<C<T>>,
    pub eigenfunction: Vec<Vec<C<T>>>,
    pub sigma2: T,
    pub gap: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub t: f64,
    pub re_lambda: f64,
    pub im_lambda: f64,
    pub abs_lambda: f64,
    pub gap: f64,
}

impl<T: Real> SpectralBranch<T> {
    pub fn zero_index(&self) -> usize {
        self.grid.iter().position(|&t| t == T::zero()).expect("grid contains 0")
    }

    pub fn rows(&self) -> Vec<BranchRow> {
        self.grid
            .iter()
            .zip(&self.lambda)
            .zip(&self.gap)
            .map(|((&t, &l), &g)| BranchRow {
                t: t.as_f64(),
                re_lambda: l.re.as_f64(),
                im_lambda: l.im.as_f64(),
                abs_lambda: l.norm().as_f64(),
                gap: g.as_f64(),
            })
            .collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), ExportError> {
        export::write_csv(path, self.rows())
    }

    /// Central difference `(v_h − v_{−h})/(2h)` using the grid neighbours
    /// of 0; `None` unless the grid is symmetric there.
    pub fn derivative_at_zero(&self) -> Option<Vec<C<T>>> {
        let z = self.zero_index();
        if z == 0 || z + 1 >= self.grid.len() {
            return None;
        }
        let h = self.grid[z + 1];
        if (self.grid[z - 1] + h).abs() > T::epsilon() * h {
            return None;
        }
        let two_h = h + h;
        Some(self.eigenfunction[z + 1].iter().zip(&self.eigenfunction[z - 1]).map(|(a, b)| (*a - *b) / two_h).collect())
    }
}

/// Symmetric grid of `2·half + 1` points on `[−π, π]` including 0.
pub fn symmetric_grid<T: Real>(half: usize) -> Vec<T> {
    let h = half as i64;
    (-h..=h).map(|j| T::PI() * T::lit(j as f64) / T::lit(half as f64)).collect()
}

pub fn eigen_branch<T: Real>(shift: &MarkovShift<T>, grid: &[T]) -> Result<SpectralBranch<T>, SpectralError> {
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(SpectralError::InvalidGrid("grid must be strictly increasing".into()));
    }
    let z = grid
        .iter()
        .position(|&t| t == T::zero())
        .ok_or_else(|| SpectralError::InvalidGrid("grid must contain 0".into()))?;
    let sigma2 = asymptotic_variance(shift)?;
    let q = transfer_matrix(shift);
    let pi = shift.stationary();
    let n = shift.len();
    let m = grid.len();
    let one = C::new(T::one(), T::zero());
    let mut lambda = vec![one; m];
    let mut eigenfunction = vec![vec![one; n]; m];
    let mut gap = vec![T::zero(); m];

    let op0 = twist(&q, shift.observable(), T::zero());
    gap[z] = T::one() - subdominant(&op0, one)?.0;

    for dir in [1isize, -1] {
        let mut prev = z;
        let mut prev2: Option<usize> = None;
        let mut i = z as isize + dir;
        while i >= 0 && (i as usize) < m {
            let k = i as usize;
            let t = grid[k];
            let op = twist(&q, shift.observable(), t);
            let mu = match prev2 {
                Some(p2) => {
                    let slope = (lambda[prev] - lambda[p2]) / (grid[prev] - grid[p2]);
                    lambda[prev] + slope * (t - grid[prev])
                }
                None => lambda[prev],
            };
            let (l, v) = follow(&op, pi, mu, &eigenfunction[prev])?;
            let (rho2, nearest) = subdominant(&op, l)?;
            if let Some(other) = nearest {
                if (other - l).norm() < T::tol(AMBIGUITY_TOL) && l.norm() > T::lit(AMBIGUITY_FLOOR) {
                    return Err(SpectralError::BranchAmbiguity {
                        t: t.as_f64(),
                        lambda: format!("{l}"),
                        other: format!("{other}"),
                    });
                }
            }
            lambda[k] = l;
            eigenfunction[k] = v;
            gap[k] = l.norm() - rho2;
            prev2 = Some(prev);
            prev = k;
            i += dir;
        }
    }
    Ok(SpectralBranch { grid: grid.to_vec(), lambda, eigenfunction, sigma2, gap })
}

/// `λ_t` by inverse iteration from the constant function with shift 1.
///
/// Valid for `t` small enough that `λ_t` is the eigenvalue nearest 1.
pub fn leading_eigenvalue<T: Real>(shift: &MarkovShift<T>, t: T) -> Result<C<T>, SpectralError> {
    let op = twisted_operator(shift, t);
    let seed = vec![C::new(T::one(), T::zero()); shift.len()];
    Ok(inverse_iteration(&op, shift.stationary(), C::new(T::one(), T::zero()), &seed)?.0)
}

/// Green–Kubo variance: `σ² = Σ π(2φg − φ²)` with `(I − P + 1πᵀ)g = φ`.
pub fn green_kubo_variance<T: Real>(shift: &MarkovShift<T>) -> Result<T, SpectralError> {
    let n = shift.len();
    let p = shift.transition();
    let pi = shift.stationary();
    let a = Matrix::from_fn(n, n, |i, j| {
        let d = if i == j { T::one() } else { T::zero() };
        d - p[(i, j)] + pi[j]
    });
    let phi: Vec<T> = shift.observable().iter().map(|&f| T::lit(f as f64)).collect();
    let g = solve(&a, &phi)?;
    Ok((0..n).map(|s| pi[s] * (T::lit(2.0) * phi[s] * g[s] - phi[s] * phi[s])).sum())
}

/// Base step for the numeric second derivative: `1e-3`, or `ε^{1/4}` when
/// the scalar cannot resolve `1 − λ_h` at that step.
pub fn second_difference_step<T: Real>() -> T {
    T::lit(SECOND_DIFFERENCE_STEP).max(T::epsilon().sqrt().sqrt())
}

/// Relative tolerance between the Green–Kubo and `−λ''(0)` routes:
/// `1e-6`, widened for single precision.
pub fn variance_route_tolerance<T: Real>() -> T {
    T::lit(1e-6).max(T::lit(32.0) * T::epsilon().sqrt())
}

/// `−λ''(0)` by central second differences at steps `{4h, 2h, h}`,
/// Richardson-extrapolated twice.
pub fn numeric_variance<T: Real>(shift: &MarkovShift<T>) -> Result<T, SpectralError> {
    let h = second_difference_step::<T>();
    // λ_{−t} = conj(λ_t), so the symmetric difference only needs Re λ_t.
    let d = |s: T| -> Result<T, SpectralError> {
        let l = leading_eigenvalue(shift, s)?;
        Ok(T::lit(2.0) * (l.re - T::one()) / (s * s))
    };
    let (d1, d2, d4) = (d(h)?, d(h * T::lit(2.0))?, d(h * T::lit(4.0))?);
    let r1 = (T::lit(4.0) * d1 - d2) / T::lit(3.0);
    let r2 = (T::lit(4.0) * d2 - d4) / T::lit(3.0);
    Ok(-(T::lit(16.0) * r1 - r2) / T::lit(15.0))
}

/// `σ²` by Green–Kubo, cross-checked against `−λ''(0)`.
pub fn asymptotic_variance<T: Real>(shift: &MarkovShift<T>) -> Result<T, SpectralError> {
    let gk = green_kubo_variance(shift)?;
    if gk <= T::lit(VARIANCE_FLOOR) {
        return Err(SpectralError::VarianceZero { sigma2: gk.as_f64() });
    }
    let num = numeric_variance(shift)?;
    if ((gk - num) / gk).abs() > variance_route_tolerance::<T>() {
        return Err(SpectralError::ConventionMismatch { green_kubo: gk.as_f64(), numeric: num.as_f64() });
    }
    Ok(gk)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AperiodicityReport {
    pub is_aperiodic: bool,
    pub min_gap: f64,
    pub offending_t: f64,
}

impl AperiodicityReport {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), ExportError> {
        export::write_json(path, self)
    }
}

/// Default excluded neighbourhood of `t = 0` for a scan of `scan_points`.
pub fn default_edge(scan_points: usize) -> f64 {
    std::f64::consts::TAU / (8.0 * scan_points as f64)
}

/// Scan `1 − ρ(P_t)` over `[δ₀, 2π − δ₀]` with `δ₀ = 2π/(8·scan_points)`.
pub fn check_aperiodicity<T: Real>(
    shift: &MarkovShift<T>,
    scan_points: usize,
) -> Result<AperiodicityReport, SpectralError> {
    check_aperiodicity_with_edge(shift, scan_points, T::lit(default_edge(scan_points)))
}

/// [`check_aperiodicity`] over `[edge, 2π − edge]`.
///
/// The uniform scan is refined 8× around points with gap below `1e-4`,
/// and every discrete local minimum is polished by golden-section search
/// inside its bracket, so isolated zeros of the gap between grid points
/// (e.g. `t = π` for an even scan) are found.
pub fn check_aperiodicity_with_edge<T: Real>(
    shift: &MarkovShift<T>,
    scan_points: usize,
    edge: T,
) -> Result<AperiodicityReport, SpectralError> {
    if scan_points < 2 {
        return Err(SpectralError::InvalidGrid("scan_points must be at least 2".into()));
    }
    let q = transfer_matrix(shift);
    let phi = shift.observable();
    let gap_at = |t: T| -> Result<T, SpectralError> { Ok(T::one() - twist(&q, phi, t).spectral_radius()?) };
    let lo = edge;
    let hi = T::TAU() - edge;
    let step = (hi - lo) / T::lit((scan_points - 1) as f64);
    let mut ts: Vec<T> = (0..scan_points).map(|j| lo + step * T::lit(j as f64)).collect();
    let mut gaps: Vec<T> = ts.par_iter().map(|&t| gap_at(t)).collect::<Result<_, _>>()?;

    let fine: Vec<T> = (0..scan_points)
        .filter(|&j| gaps[j] < T::lit(REFINE_BELOW))
        .flat_map(|j| {
            let a = if j == 0 { lo } else { ts[j - 1] };
            let b = if j + 1 == scan_points { hi } else { ts[j + 1] };
            let sub = step / T::lit(8.0);
            let count = ((b - a) / sub).round().to_usize().unwrap_or(0);
            (1..count).map(move |k| a + sub * T::lit(k as f64))
        })
        .collect();
    if !fine.is_empty() {
        let fine_gaps: Vec<T> = fine.par_iter().map(|&t| gap_at(t)).collect::<Result<_, _>>()?;
        let mut merged: Vec<(T, T)> =
            ts.iter().copied().zip(gaps.iter().copied()).chain(fine.into_iter().zip(fine_gaps)).collect();
        merged.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        merged.dedup_by(|a, b| (a.0 - b.0).abs() <= T::epsilon() * T::lit(8.0));
        ts = merged.iter().map(|p| p.0).collect();
        gaps = merged.iter().map(|p| p.1).collect();
    }

    let m = ts.len();
    let minima: Vec<usize> =
        (0..m).filter(|&j| (j == 0 || gaps[j] <= gaps[j - 1]) && (j + 1 == m || gaps[j] <= gaps[j + 1])).collect();
    let polished: Vec<(T, T)> = minima
        .par_iter()
        .map(|&j| {
            let a = if j == 0 { ts[0] } else { ts[j - 1] };
            let b = if j + 1 == m { ts[m - 1] } else { ts[j + 1] };
            golden_min(&gap_at, a, b, (ts[j], gaps[j]))
        })
        .collect::<Result<_, _>>()?;

    let mut best = (ts[0], gaps[0]);
    for (&t, &g) in ts.iter().zip(&gaps).chain(polished.iter().map(|(t, g)| (t, g))) {
        if g < best.1 {
            best = (t, g);
        }
    }
    let min_gap = best.1.as_f64();
    Ok(AperiodicityReport { is_aperiodic: min_gap > APERIODICITY_GAP, min_gap, offending_t: best.0.as_f64() })
}

/// Golden-section minimisation of `f` on `[a, b]`; returns the best point
/// seen, including `start`.
fn golden_min<T: Real>(
    f: &impl Fn(T) -> Result<T, SpectralError>,
    mut a: T,
    mut b: T,
    start: (T, T),
) -> Result<(T, T), SpectralError> {
    let r = T::lit(0.618_033_988_749_894_9);
    let mut best = start;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let tol = T::epsilon().sqrt() * T::lit(1e-2);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
        for (t, g) in [(c, fc), (d, fd)] {
            if g < best.1 {
                best = (t, g);
            }
        }
    }
    Ok(best)
}

/// `‖P_t^k·1 − λ_t^k·π_t 1‖_∞` for `k = 1..=n`, where `π_t` is the spectral
/// projection onto `v_t` along the left eigenvector.
pub fn rank_one_residuals<T: Real>(shift: &MarkovShift<T>, t: T, n: usize) -> Result<(C<T>, T, Vec<T>), SpectralError> {
    let op = twisted_operator(shift, t);
    let len = shift.len();
    let one = C::new(T::one(), T::zero());
    let ones = vec![one; len];
    // Continue the branch from 0 at the default spacing.
    let k = (t.abs() / T::lit(std::f64::consts::TAU / 1024.0)).ceil().to_usize().unwrap_or(0);
    let mut grid: Vec<T> = (0..=k).map(|j| t * T::lit(j as f64 / k.max(1) as f64)).collect();
    if t < T::zero() {
        grid.reverse();
    }
    let branch = eigen_branch(shift, &grid)?;
    let end = if t < T::zero() { 0 } else { k };
    let (lambda, v) = (branch.lambda[end], branch.eigenfunction[end].clone());
    // Left eigenvector: inverse iteration on the transpose, uniform weights.
    let adj = TwistedOperator { t, entries: op.entries.transpose() };
    let uniform = vec![T::one() / T::lit(len as f64); len];
    let (_, l) = converge(&adj, &uniform, lambda, &ones)?;
    let dot = |a: &[C<T>], b: &[C<T>]| a.iter().zip(b).fold(C::new(T::zero(), T::zero()), |s, (x, y)| s + *x * *y);
    let coeff = dot(&l, &ones) / dot(&l, &v);
    let (rho2, _) = subdominant(&op, lambda)?;
    let mut f = ones;
    let mut lk = one;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        f = op.apply(&f);
        lk *= lambda;
        let r = f.iter().zip(&v).map(|(a, b)| (*a - *b * lk * coeff).norm()).fold(T::zero(), T::max);
        out.push(r);
    }
    Ok((lambda, rho2, out))
}
