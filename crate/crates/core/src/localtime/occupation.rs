use serde::{Deserialize, Serialize};

use super::field::{local_time_field, LocalTimeField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strips {
    pub left: f64,
    pub right: f64,
}

/// Occupation time of `[a, b)` by the rescaled walk against the integral of
/// its local time over the same interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupationResult {
    pub a: f64,
    pub b: f64,
    /// `#{0 ≤ k ≤ n−1 : a ≤ S_k/√n < b}/n`.
    pub nu: f64,
    /// `∫_a^b l_n(x) dx`.
    pub integral: f64,
    /// Integrals of `l_n` over the lattice cells containing `a` and `b`.
    pub strips: Strips,
    /// `n·nu`.
    pub visits: u64,
}

impl OccupationResult {
    pub fn difference(&self) -> f64 {
        (self.nu - self.integral).abs()
    }

    /// Slack left in `|nu − ∫l_n| ≤ strips + 2/n`; negative means violated.
    pub fn slack(&self, n: usize) -> f64 {
        self.strips.left + self.strips.right + 2.0 / n as f64 - self.difference()
    }

    pub fn holds(&self, n: usize) -> bool {
        self.slack(n) >= 0.0
    }
}

#[inline]
fn inside(a: f64, b: f64, level: i64, sqrt_n: f64) -> bool {
    let x = level as f64 / sqrt_n;
    a <= x && x < b
}

pub fn occupation(increments: &[i64], a: f64, b: f64) -> OccupationResult {
    occupation_of_field(&local_time_field(increments), a, b)
}

/// Same as [`occupation`], from an already built field.
///
/// Panics unless `a < b`.
pub fn occupation_of_field(field: &LocalTimeField, a: f64, b: f64) -> OccupationResult {
    assert!(a < b, "occupation needs a < b");
    let n = field.n();
    let r = field.sqrt_n();
    let nf = n as f64;
    let (ca, cb) = (field.cell(a), field.cell(b));

    // Visits at times 0..=n inside [a, b), minus the one at time n.
    let lo = ca.max(field.min_level());
    let hi = cb.min(field.max_level());
    let mut visits: u64 = (lo..=hi).filter(|&j| inside(a, b, j, r)).map(|j| field.count(j) as u64).sum();
    if inside(a, b, field.end(), r) {
        visits -= 1;
    }

    let integral: f64 = (lo..=hi)
        .map(|j| {
            let left = a.max(j as f64 / r);
            let right = b.min((j + 1) as f64 / r);
            if right > left {
                field.count(j) as f64 / r * (right - left)
            } else {
                0.0
            }
        })
        .sum();

    OccupationResult {
        a,
        b,
        nu: visits as f64 / nf,
        integral,
        strips: Strips { left: field.count(ca) as f64 / nf, right: field.count(cb) as f64 / nf },
        visits,
    }
}

/// `ν[a,b)` as the left-endpoint Riemann sum of `ω_n(t) = S_{⌊nt⌋}/√n`.
pub fn riemann_occupation(increments: &[i64], a: f64, b: f64) -> u64 {
    let r = (increments.len() as f64).sqrt();
    let mut s = 0i64;
    let mut hits = 0u64;
    for &d in increments {
        if inside(a, b, s, r) {
            hits += 1;
        }
        s += d;
    }
    hits
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whole_range() {
        let inc = [1, 1, 0, -1, 1, 1, -1, -1, -1];
        let o = occupation(&inc, -10.0, 10.0);
        assert_eq!(o.nu, 1.0);
        assert!((o.integral - 10.0 / 9.0).abs() < 1e-15);
        assert!(o.holds(inc.len()));
    }

    #[test]
    fn empty_range() {
        let o = occupation(&[1, 1, 1, 1], -3.0, -2.0);
        assert_eq!((o.nu, o.integral), (0.0, 0.0));
    }

    #[test]
    fn matches_riemann_sum() {
        let inc = [1, 0, -1, -1, -1, 0, 1, 2, -2, 1, 1, 1, 0, 0, -1, 1];
        for (a, b) in [(-0.3, 0.3), (0.0, 0.5), (-1.0, -0.25), (0.25, 0.26)] {
            let o = occupation(&inc, a, b);
            assert_eq!(o.visits, riemann_occupation(&inc, a, b));
            assert!(o.holds(inc.len()), "{o:?}");
        }
    }
}
