use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::export::{self, ExportError};

/// Visit counts `L_n(k) = #{0 ≤ k' ≤ n : S_{k'} = k}` of one trajectory.
///
/// Counts are stored densely over the visited range `[min S, max S]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalTimeField {
    n: usize,
    offset: i64,
    counts: Vec<u32>,
    end: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldRow {
    pub k: i64,
    pub count: u32,
}

/// Build the field of the walk `S_0 = 0`, `S_k = S_{k−1} + increments[k−1]`.
///
/// Panics on an empty increment sequence.
pub fn local_time_field(increments: &[i64]) -> LocalTimeField {
    assert!(!increments.is_empty(), "local_time_field needs at least one increment");
    let mut s = 0i64;
    let (mut lo, mut hi) = (0i64, 0i64);
    for &d in increments {
        s += d;
        lo = lo.min(s);
        hi = hi.max(s);
    }
    let mut counts = vec![0u32; (hi - lo + 1) as usize];
    s = 0;
    counts[(-lo) as usize] = 1;
    for &d in increments {
        s += d;
        counts[(s - lo) as usize] += 1;
    }
    LocalTimeField { n: increments.len(), offset: lo, counts, end: s }
}

impl LocalTimeField {
    /// From raw counts starting at level `offset`; `end` is `S_n`.
    ///
    /// Panics unless the counts sum to `n + 1`.
    pub fn from_counts(n: usize, offset: i64, counts: Vec<u32>, end: i64) -> Self {
        let total: u64 = counts.iter().map(|&c| c as u64).sum();
        assert_eq!(total, n as u64 + 1, "counts must sum to n + 1");
        Self { n, offset, counts, end }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Lowest visited level.
    pub fn min_level(&self) -> i64 {
        self.offset
    }

    pub fn max_level(&self) -> i64 {
        self.offset + self.counts.len() as i64 - 1
    }

    /// Final position `S_n`.
    pub fn end(&self) -> i64 {
        self.end
    }

    /// `L_n(k)`.
    #[inline]
    pub fn count(&self, k: i64) -> u32 {
        let i = k - self.offset;
        if i < 0 || i >= self.counts.len() as i64 {
            0
        } else {
            self.counts[i as usize]
        }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn sqrt_n(&self) -> f64 {
        (self.n as f64).sqrt()
    }

    /// Lattice cell of the real level `x`: `⌊√n·x⌋`.
    #[inline]
    pub fn cell(&self, x: f64) -> i64 {
        (self.sqrt_n() * x).floor() as i64
    }

    /// `l_n(x) = L_n(⌊√n·x⌋)/√n`.
    pub fn l(&self, x: f64) -> f64 {
        self.count(self.cell(x)) as f64 / self.sqrt_n()
    }

    /// `sup l_n` over `[a, b]`.
    pub fn sup_on(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = (self.cell(a), self.cell(b));
        (lo..=hi).map(|k| self.count(k)).max().unwrap_or(0) as f64 / self.sqrt_n()
    }

    pub fn rows(&self) -> Vec<FieldRow> {
        self.counts.iter().enumerate().map(|(i, &count)| FieldRow { k: self.offset + i as i64, count }).collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), ExportError> {
        export::write_csv(path, self.rows())
    }
}

/// Reusable scratch space for building many fields of the same length
/// without reallocating the full lattice.
#[derive(Debug, Clone)]
pub struct FieldBuilder {
    n: usize,
    base: i64,
    counts: Vec<u32>,
}

impl FieldBuilder {
    /// Scratch for walks of `n` steps with increments in `[phi_min, phi_max]`.
    pub fn new(n: usize, phi_min: i64, phi_max: i64) -> Self {
        let base = (n as i64) * phi_min.min(0);
        let top = (n as i64) * phi_max.max(0);
        Self { n, base, counts: vec![0; (top - base + 1) as usize] }
    }

    /// Field of the walk with the given increments (exactly `n` of them).
    pub fn build(&mut self, increments: impl IntoIterator<Item = i64>) -> LocalTimeField {
        let base = self.base;
        let counts = &mut self.counts[..];
        let mut s = 0i64;
        let (mut lo, mut hi) = (0i64, 0i64);
        let mut steps = 0usize;
        counts[(-base) as usize] += 1;
        for d in increments {
            s += d;
            lo = lo.min(s);
            hi = hi.max(s);
            counts[(s - base) as usize] += 1;
            steps += 1;
        }
        assert_eq!(steps, self.n, "walk produced the wrong number of increments");
        let range = (lo - base) as usize..=(hi - base) as usize;
        let out = counts[range.clone()].to_vec();
        counts[range].fill(0);
        LocalTimeField { n: self.n, offset: lo, counts: out, end: s }
    }
}
