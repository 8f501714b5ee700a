use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::field::LocalTimeField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub h: f64,
    pub delta: f64,
    /// `ω_{l_n}(2δ)` over `[−h, h]`.
    pub omega: f64,
    /// `ω'_{l_n}(δ)` over `[−h, h]`.
    pub omega_prime: f64,
}

/// `l_n` on `[−h, h]` as cells `[start, end)` in lattice units (`x·√n`),
/// with the visit counts as values. `closed` keeps a zero-width last cell
/// at `h` when `h·√n` is an integer.
struct Cells {
    start: Vec<f64>,
    end: Vec<f64>,
    count: Vec<i64>,
}

fn cells(field: &LocalTimeField, h: f64, closed: bool) -> Cells {
    let r = field.sqrt_n();
    let (lo, hi) = (-h * r, h * r);
    let (j0, j1) = (field.cell(-h), field.cell(h));
    let mut c = Cells { start: Vec::new(), end: Vec::new(), count: Vec::new() };
    for j in j0..=j1 {
        let s = (j as f64).max(lo);
        let e = ((j + 1) as f64).min(hi);
        if e < s || (e == s && !(closed && j == j1)) {
            continue;
        }
        c.start.push(s);
        c.end.push(e);
        c.count.push(field.count(j) as i64);
    }
    c
}

/// Max and min of a sliding window, by monotone deques.
#[derive(Default)]
struct Extremes {
    max: VecDeque<usize>,
    min: VecDeque<usize>,
}

impl Extremes {
    fn push(&mut self, v: &[i64], j: usize) {
        while self.max.back().is_some_and(|&b| v[b] <= v[j]) {
            self.max.pop_back();
        }
        self.max.push_back(j);
        while self.min.back().is_some_and(|&b| v[b] >= v[j]) {
            self.min.pop_back();
        }
        self.min.push_back(j);
    }

    fn drop_before(&mut self, i: usize) {
        while self.max.front().is_some_and(|&f| f < i) {
            self.max.pop_front();
        }
        while self.min.front().is_some_and(|&f| f < i) {
            self.min.pop_front();
        }
    }

    fn range(&self, v: &[i64]) -> i64 {
        v[self.max[0]] - v[self.min[0]]
    }
}

/// `ω(η) = sup{|l(s) − l(t)| : s, t ∈ [−h, h], |s − t| < η}`.
///
/// Cells `i < j` can be joined iff `start_j − end_i < η`; since that
/// condition is monotone, the admissible sets are sliding windows.
pub fn plain_modulus(field: &LocalTimeField, h: f64, eta: f64) -> f64 {
    let c = cells(field, h, true);
    let eta = eta * field.sqrt_n();
    let mut best = 0i64;
    let mut w = Extremes::default();
    let mut i = 0usize;
    for j in 0..c.count.len() {
        w.push(&c.count, j);
        while i < j && c.start[j] - c.end[i] >= eta {
            i += 1;
        }
        w.drop_before(i);
        best = best.max(w.range(&c.count));
    }
    best as f64 / field.sqrt_n()
}

/// `ω'(δ) = inf over δ-sparse partitions of max_i ω([t_i, t_{i+1}))`.
///
/// Only the set of cells an interval meets matters, so a cut point is
/// either a breakpoint between cells or lies strictly inside a cell (then
/// both neighbouring intervals meet that cell). The optimum is the least
/// integer count range `θ` for which [`partition_exists`] succeeds.
pub fn sparse_modulus(field: &LocalTimeField, h: f64, delta: f64) -> f64 {
    let c = cells(field, h, false);
    let d = delta * field.sqrt_n();
    let hi = c.count.iter().max().unwrap() - c.count.iter().min().unwrap();
    let (mut lo, mut hi) = (0i64, hi);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if partition_exists(&c, d, mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo as f64 / field.sqrt_n()
}

/// Is there a partition with spacing `> d` whose intervals each have count
/// range `≤ theta`?
///
/// Cut states in left-to-right order are `B_0, I_0, B_1, …, I_{m−1}, B_m`
/// (`B_j` the start of cell `j`, `I_c` inside cell `c`). For each state we
/// keep the earliest position at which a valid partition of `[−h, t)` can
/// place its last cut; a state `Q` may follow `P` when the cells between
/// them have range `≤ theta` and `pos(Q) > pos(P) + d`. The earliest
/// feasible predecessor is a sliding-window minimum.
fn partition_exists(c: &Cells, d: f64, theta: i64) -> bool {
    let m = c.count.len();
    // first[l]: smallest first cell r such that cells r..=l have range ≤ θ.
    let mut first = vec![0usize; m];
    let mut w = Extremes::default();
    let mut r = 0usize;
    for (l, f) in first.iter_mut().enumerate() {
        w.push(&c.count, l);
        while w.range(&c.count) > theta {
            r += 1;
            w.drop_before(r);
        }
        *f = r;
    }
    // Feasible states as (first cell of the next interval, earliest position),
    // with positions increasing from front to back.
    let mut window: VecDeque<(usize, f64)> = VecDeque::new();
    let push = |window: &mut VecDeque<(usize, f64)>, state: (usize, f64)| {
        while window.back().is_some_and(|b| b.1 >= state.1) {
            window.pop_back();
        }
        window.push_back(state);
    };
    push(&mut window, (0, c.start[0]));
    for cell in 0..m {
        while window.front().is_some_and(|f| f.0 < first[cell]) {
            window.pop_front();
        }
        let Some(&(_, earliest)) = window.front() else {
            return false;
        };
        let inside = c.start[cell].max(earliest + d);
        if inside < c.end[cell] {
            push(&mut window, (cell, inside));
        }
        let (_, earliest) = window[0];
        let at_end = earliest + d < c.end[cell];
        if cell + 1 == m {
            return at_end;
        }
        if at_end {
            push(&mut window, (cell + 1, c.end[cell]));
        }
    }
    unreachable!("window has at least one cell")
}

/// Both moduli: `ω(2δ)` and `ω'(δ)`.
///
/// Panics unless `0 < δ < 1/2 ≤ h`.
pub fn modulus(field: &LocalTimeField, h: f64, delta: f64) -> ModulusReport {
    assert!(delta > 0.0 && delta < 0.5 && h >= 0.5, "modulus needs 0 < delta < 1/2 <= h");
    ModulusReport {
        h,
        delta,
        omega: plain_modulus(field, h, 2.0 * delta),
        omega_prime: sparse_modulus(field, h, delta),
    }
}
