//! Trajectory sampling with per-trajectory random streams.
//!
//! Trajectory `i` of a batch seeded with `seed` always draws from the
//! ChaCha8 stream `(seed, i)`, so a batch is a pure function of
//! `(shift, n, count, seed)` no matter how the trajectories are scheduled.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::chain::MarkovShift;
use crate::scalar::Real;

/// Random stream for trajectory `index` under master `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Inverse-CDF tables in 64-bit fixed point.
///
/// Rows whose cumulative probabilities are dyadic with denominator `2^k`
/// (e.g. `1/4, 1/2, 1/4`) consume only `k` random bits per draw; this is
/// exact, not an approximation.
#[derive(Debug, Clone)]
pub struct Sampler {
    phi: Vec<i64>,
    initial: Vec<u64>,
    rows: Vec<Vec<u64>>,
    fallback_initial: usize,
    fallback_rows: Vec<usize>,
    bits_initial: u32,
    bits_rows: Vec<u32>,
}

/// Bits needed to resolve every threshold in `cut` exactly (64 if some
/// threshold is not a multiple of `2^(64−k)` for `k ≤ 32`).
fn resolution(cut: &[u64]) -> u32 {
    (1..=32).find(|&k| cut.iter().all(|&c| c == u64::MAX || c.trailing_zeros() >= 64 - k)).unwrap_or(64)
}

/// Hands out random bits in chunks, refilling from the stream as needed.
struct Bits<'a, R> {
    rng: &'a mut R,
    word: u64,
    left: u32,
}

impl<R: RngCore> Bits<'_, R> {
    /// `k` fresh bits placed in the top of a `u64`.
    #[inline]
    fn top(&mut self, k: u32) -> u64 {
        if k >= 64 {
            return self.rng.next_u64();
        }
        if self.left < k {
            self.word = self.rng.next_u64();
            self.left = 64;
        }
        let v = self.word >> (64 - k) << (64 - k);
        self.word <<= k;
        self.left -= k;
        v
    }
}

fn thresholds(probs: &[f64]) -> (Vec<u64>, usize) {
    const SCALE: f64 = 18_446_744_073_709_551_616.0; // 2^64
    let mut acc = 0.0;
    let cut = probs
        .iter()
        .map(|&p| {
            acc += p;
            let v = acc * SCALE;
            if v >= SCALE {
                u64::MAX
            } else {
                v as u64
            }
        })
        .collect();
    let last = probs.iter().rposition(|&p| p > 0.0).expect("row has mass");
    (cut, last)
}

/// First index with `u < cut[i]`; thresholds are nondecreasing, so this is
/// the number of thresholds `≤ u` (counted without branching).
#[inline]
fn pick(cut: &[u64], fallback: usize, u: u64) -> usize {
    let i = cut.iter().map(|&c| (u >= c) as usize).sum::<usize>();
    if i < cut.len() {
        i
    } else {
        fallback
    }
}

impl Sampler {
    pub fn new<T: Real>(shift: &MarkovShift<T>) -> Self {
        let pi: Vec<f64> = shift.stationary().iter().map(|v| v.as_f64()).collect();
        let (initial, fallback_initial) = thresholds(&pi);
        let (rows, fallback_rows): (Vec<Vec<u64>>, Vec<usize>) = (0..shift.len())
            .map(|i| {
                let r: Vec<f64> = shift.transition().row(i).iter().map(|v| v.as_f64()).collect();
                thresholds(&r)
            })
            .unzip();
        Self {
            phi: shift.observable().to_vec(),
            bits_initial: resolution(&initial),
            bits_rows: rows.iter().map(|r| resolution(r)).collect(),
            initial,
            rows,
            fallback_initial,
            fallback_rows,
        }
    }

    /// Run `n` steps from a stationary start, passing each increment
    /// `φ(X_k)`, `k = 0..n`, to `visit`.
    #[inline]
    pub fn walk(&self, rng: &mut impl RngCore, n: usize, mut visit: impl FnMut(i64)) {
        self.visit_states(rng, n, |s| visit(self.phi[s]));
    }

    #[inline]
    fn visit_states(&self, rng: &mut impl RngCore, n: usize, mut visit: impl FnMut(usize)) {
        let mut bits = Bits { rng, word: 0, left: 0 };
        let mut s = pick(&self.initial, self.fallback_initial, bits.top(self.bits_initial));
        for k in 0..n {
            visit(s);
            if k + 1 < n {
                s = pick(&self.rows[s], self.fallback_rows[s], bits.top(self.bits_rows[s]));
            }
        }
    }

    /// Increments `φ(X_0), …, φ(X_{n−1})` as an iterator.
    pub fn increments<'a, R: RngCore>(&'a self, rng: &'a mut R, n: usize) -> Increments<'a, R> {
        Increments { sampler: self, bits: Bits { rng, word: 0, left: 0 }, state: usize::MAX, left: n }
    }

    /// Visited states `X_0..X_{n−1}`.
    pub fn states(&self, rng: &mut impl RngCore, n: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(n);
        self.visit_states(rng, n, |s| out.push(s));
        out
    }

    /// Increments of trajectory `index` into `buf` (cleared first).
    pub fn fill(&self, seed: u64, index: u64, n: usize, buf: &mut Vec<i64>) {
        buf.clear();
        buf.reserve(n);
        let mut rng = trajectory_rng(seed, index);
        self.walk(&mut rng, n, |d| buf.push(d));
    }
}

pub struct Increments<'a, R> {
    sampler: &'a Sampler,
    bits: Bits<'a, R>,
    state: usize,
    left: usize,
}

impl<R: RngCore> Iterator for Increments<'_, R> {
    type Item = i64;

    #[inline]
    fn next(&mut self) -> Option<i64> {
        if self.left == 0 {
            return None;
        }
        self.left -= 1;
        let sm = self.sampler;
        self.state = if self.state == usize::MAX {
            pick(&sm.initial, sm.fallback_initial, self.bits.top(sm.bits_initial))
        } else {
            let s = self.state;
            pick(&sm.rows[s], sm.fallback_rows[s], self.bits.top(sm.bits_rows[s]))
        };
        Some(sm.phi[self.state])
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.left, Some(self.left))
    }
}

/// Increments of `count` independent stationary trajectories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathBatch {
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    increments: Vec<i64>,
}

impl PathBatch {
    pub fn trajectory(&self, i: usize) -> &[i64] {
        &self.increments[i * self.n..(i + 1) * self.n]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[i64]> {
        self.increments.chunks_exact(self.n)
    }

    pub fn increments(&self) -> &[i64] {
        &self.increments
    }
}

/// Sample a batch. Panics if `n` or `count` is zero.
///
/// Stores `n·count` integers; for large campaigns stream trajectories
/// through [`Sampler::fill`] instead.
pub fn sample_paths<T: Real>(shift: &MarkovShift<T>, n: usize, count: usize, seed: u64) -> PathBatch {
    assert!(n >= 1 && count >= 1, "sample_paths needs n >= 1 and count >= 1");
    let sampler = Sampler::new(shift);
    let mut increments = vec![0i64; n * count];
    increments.par_chunks_mut(n).enumerate().for_each(|(i, chunk)| {
        let mut rng = trajectory_rng(seed, i as u64);
        let mut k = 0;
        sampler.walk(&mut rng, n, |d| {
            chunk[k] = d;
            k += 1;
        });
    });
    PathBatch { n, count, seed, increments }
}

/// Apply `f` to trajectory indices `0..count` in parallel, results in index
/// order. `f` receives a reusable increment buffer already filled with the
/// trajectory.
pub fn map_trajectories<T, R, F>(shift: &MarkovShift<T>, n: usize, count: usize, seed: u64, f: F) -> Vec<R>
where
    T: Real,
    R: Send,
    F: Fn(usize, &[i64]) -> R + Sync,
{
    let sampler = Sampler::new(shift);
    (0..count)
        .into_par_iter()
        .map_init(Vec::new, |buf, i| {
            sampler.fill(seed, i as u64, n, buf);
            f(i, buf)
        })
        .collect()
}
