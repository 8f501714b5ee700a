//! Small dense linear algebra: row-major matrices, LU with partial pivoting
//! and a complex Hessenberg–QR eigenvalue solver.
//!
//! Chains in this crate have at most a few hundred states, so everything is
//! dense and single threaded.

use std::fmt::Debug;
use std::ops::Neg;

use num_complex::Complex;
use num_traits::{Float, NumAssign, Zero};
use thiserror::Error;

use crate::scalar::{Real, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (pivot {pivot} at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("QR iteration did not converge after {iterations} sweeps")]
    NoConvergence { iterations: usize },
}

/// Matrix entry: a real scalar or a complex number over one.
pub trait Entry: Copy + NumAssign + Neg<Output = Self> + Debug + Send + Sync + 'static {
    type Real: Real;
    fn modulus(self) -> Self::Real;
    fn from_real(r: Self::Real) -> Self;
}

impl<T: Real> Entry for T {
    type Real = T;
    #[inline]
    fn modulus(self) -> T {
        self.abs()
    }
    #[inline]
    fn from_real(r: T) -> T {
        r
    }
}

impl<T: Real> Entry for Complex<T> {
    type Real = T;
    #[inline]
    fn modulus(self) -> T {
        self.norm()
    }
    #[inline]
    fn from_real(r: T) -> Complex<T> {
        Complex::new(r, T::zero())
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Entry> Matrix<E> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![E::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = E::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<E>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(LinalgError::Dimension { expected: c, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: r, cols: c, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[E] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `y = A·x`.
    pub fn mul_vec(&self, x: &[E]) -> Vec<E> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).iter().zip(x).fold(E::zero(), |acc, (&a, &b)| acc + a * b)).collect()
    }

    /// `y = A·x` into a caller-provided buffer.
    pub fn mul_vec_into(&self, x: &[E], y: &mut [E]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).iter().zip(x).fold(E::zero(), |acc, (&a, &b)| acc + a * b);
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> E::Real {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.modulus()).sum::<E::Real>())
            .fold(E::Real::zero(), |a, b| a.max(b))
    }

    pub fn max_abs_diff(&self, other: &Self) -> E::Real {
        self.data.iter().zip(&other.data).map(|(&a, &b)| (a - b).modulus()).fold(E::Real::zero(), |a, b| a.max(b))
    }
}

impl<E> std::ops::Index<(usize, usize)> for Matrix<E> {
    type Output = E;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &E {
        &self.data[i * self.cols + j]
    }
}

impl<E> std::ops::IndexMut<(usize, usize)> for Matrix<E> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut E {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, `P·A = L·U`.
#[derive(Debug, Clone)]
pub struct Lu<E> {
    lu: Matrix<E>,
    perm: Vec<usize>,
}

impl<E: Entry> Lu<E> {
    pub fn factor(a: &Matrix<E>) -> Result<Self, LinalgError> {
        let n = a.rows;
        if a.cols != n {
            return Err(LinalgError::Dimension { expected: n, got: a.cols });
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.norm_inf().max(E::Real::min_positive_value());
        let tiny = scale * E::Real::epsilon() * E::Real::lit(1e-3);
        for k in 0..n {
            let (p, pivot) = (k..n).map(|i| (i, lu[(i, k)].modulus())).fold((k, E::Real::zero()), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
            if pivot <= tiny {
                return Err(LinalgError::Singular { column: k, pivot: pivot.as_f64() });
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != E::zero() {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= f * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[E]) -> Vec<E> {
        let n = self.lu.rows;
        let mut x: Vec<E> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }
}

/// Solve `A·x = b`.
pub fn solve<E: Entry>(a: &Matrix<E>, b: &[E]) -> Result<Vec<E>, LinalgError> {
    if b.len() != a.rows {
        return Err(LinalgError::Dimension { expected: a.rows, got: b.len() });
    }
    Ok(Lu::factor(a)?.solve(b))
}

/// Givens rotation `G = [[c, s], [-conj(s), c]]` with `G·[a; b] = [r; 0]`.
#[inline]
fn givens<T: Real>(a: C<T>, b: C<T>) -> (T, C<T>) {
    let na = a.norm();
    let nb = b.norm();
    if nb == T::zero() {
        return (T::one(), C::new(T::zero(), T::zero()));
    }
    if na == T::zero() {
        return (T::zero(), C::new(T::one(), T::zero()));
    }
    let r = na.hypot(nb);
    let c = na / r;
    let s = (a / na) * b.conj() / r;
    (c, s)
}

/// Reduce to upper Hessenberg form by Householder reflections (similarity).
fn hessenberg<T: Real>(h: &mut Matrix<C<T>>) {
    let n = h.rows;
    if n < 3 {
        return;
    }
    let mut v = vec![C::new(T::zero(), T::zero()); n];
    for k in 0..n - 2 {
        let norm_x = (k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum::<T>().sqrt();
        if norm_x == T::zero() {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() == T::zero() { C::new(T::one(), T::zero()) } else { x0 / x0.norm() };
        let alpha = -phase * norm_x;
        for i in 0..n {
            v[i] = C::new(T::zero(), T::zero());
        }
        v[k + 1] = x0 - alpha;
        for i in k + 2..n {
            v[i] = h[(i, k)];
        }
        let vnorm = (k + 1..n).map(|i| v[i].norm_sqr()).sum::<T>().sqrt();
        if vnorm == T::zero() {
            continue;
        }
        for vi in v.iter_mut().skip(k + 1) {
            *vi /= vnorm;
        }
        let two = T::lit(2.0);
        // H <- (I - 2vv^H) H
        for j in 0..n {
            let mut dot = C::new(T::zero(), T::zero());
            for i in k + 1..n {
                dot += v[i].conj() * h[(i, j)];
            }
            for i in k + 1..n {
                let d = v[i] * dot * two;
                h[(i, j)] -= d;
            }
        }
        // H <- H (I - 2vv^H)
        for i in 0..n {
            let mut dot = C::new(T::zero(), T::zero());
            for j in k + 1..n {
                dot += h[(i, j)] * v[j];
            }
            for j in k + 1..n {
                let d = dot * v[j].conj() * two;
                h[(i, j)] -= d;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = C::new(T::zero(), T::zero());
        }
    }
}

/// All eigenvalues of a complex square matrix (order unspecified).
///
/// Householder reduction to Hessenberg form followed by explicitly shifted
/// QR sweeps with Wilkinson shifts and exceptional shifts every tenth sweep.
pub fn eigenvalues<T: Real>(a: &Matrix<C<T>>) -> Result<Vec<C<T>>, LinalgError> {
    let n = a.rows;
    if a.cols != n {
        return Err(LinalgError::Dimension { expected: n, got: a.cols });
    }
    let mut h = a.clone();
    hessenberg(&mut h);
    let eps = T::epsilon();
    let zero = C::new(T::zero(), T::zero());
    let mut eig = vec![zero; n];
    if n == 0 {
        return Ok(eig);
    }
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let max_total = 100 * n.max(4);
    let half = T::lit(0.5);
    let mut rot: Vec<(T, C<T>)> = Vec::with_capacity(n);
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let s = h[(l, l)].norm() + h[(l - 1, l - 1)].norm();
            let floor = T::min_positive_value() / eps;
            if h[(l, l - 1)].norm() <= eps * s || h[(l, l - 1)].norm() <= floor {
                h[(l, l - 1)] = zero;
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_total {
            return Err(LinalgError::NoConvergence { iterations: total });
        }
        let a11 = h[(hi - 1, hi - 1)];
        let a12 = h[(hi - 1, hi)];
        let a21 = h[(hi, hi - 1)];
        let a22 = h[(hi, hi)];
        let mu = if iter.is_multiple_of(10) {
            a22 + C::new(a21.norm() * T::lit(0.75), T::zero())
        } else {
            let tr_half = (a11 + a22) * half;
            let det = a11 * a22 - a12 * a21;
            let disc = (tr_half * tr_half - det).sqrt();
            let r1 = tr_half + disc;
            let r2 = tr_half - disc;
            if (r1 - a22).norm() <= (r2 - a22).norm() {
                r1
            } else {
                r2
            }
        };
        for k in l..=hi {
            h[(k, k)] -= mu;
        }
        rot.clear();
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..=hi {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            rot.push((c, s));
        }
        for (idx, k) in (l..hi).enumerate() {
            let (c, s) = rot[idx];
            for i in l..=(k + 1).min(hi) {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s.conj();
                h[(i, k + 1)] = -x * s + y * c;
            }
        }
        for k in l..=hi {
            h[(k, k)] += mu;
        }
    }
    Ok(eig)
}
