//! Summary statistics, Kolmogorov–Smirnov distances and the reference law
//! of the Brownian local time at 0.

use libm::erf;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("variance {0} must be positive")]
    VarianceZero(f64),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
}

/// Sum in a fixed binary-tree order (independent of how the values were
/// produced, and more accurate than a running sum).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Sample mean and its standard error.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(values) / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// A distribution function with access to left limits, so atoms are
/// handled exactly.
pub trait Cdf {
    fn cdf(&self, x: f64) -> f64;
    /// `F(x−)`.
    fn cdf_left(&self, x: f64) -> f64 {
        self.cdf(x)
    }
}

/// Continuous CDF given by a closure.
pub struct FnCdf<F>(pub F);

impl<F: Fn(f64) -> f64> Cdf for FnCdf<F> {
    fn cdf(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

/// Unit mass at `at`.
pub struct PointMass(pub f64);

impl Cdf for PointMass {
    fn cdf(&self, x: f64) -> f64 {
        if x >= self.0 {
            1.0
        } else {
            0.0
        }
    }
    fn cdf_left(&self, x: f64) -> f64 {
        if x > self.0 {
            1.0
        } else {
            0.0
        }
    }
}

/// `F(ℓ) = 2Φ(σℓ) − 1 = erf(σℓ/√2)` for `ℓ ≥ 0`, the law of `|Z|/σ`.
#[derive(Debug, Clone)]
pub struct LevyCdf {
    sigma: f64,
}

impl LevyCdf {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Cdf for LevyCdf {
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            erf(self.sigma * x / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
        }
    }
}

pub fn levy_reference_cdf(sigma2: f64) -> Result<LevyCdf, StatsError> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(StatsError::VarianceZero(sigma2));
    }
    Ok(LevyCdf { sigma: sigma2.sqrt() })
}

/// `sup_x |F_emp(x) − F(x)|` for a sorted sample, evaluated at and just
/// below every distinct sample value.
pub fn ks_statistic(sorted: &[f64], cdf: &impl Cdf) -> Result<f64, StatsError> {
    if sorted.is_empty() {
        return Err(StatsError::EmptySample);
    }
    debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]), "sample must be sorted");
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        let below = i as f64 / n;
        let at = j as f64 / n;
        d = d.max((at - cdf.cdf(v)).abs()).max((cdf.cdf_left(v) - below).abs());
        i = j;
    }
    Ok(d.min(1.0))
}

/// Two-sample distance `sup_x |F_a(x) − F_b(x)|` for sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() || j < b.len() {
        let v = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Least-squares fit `log y = c + slope·log x`; returns `(slope, c, stderr
/// of slope)`. The stderr is NaN for two points.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64), StatsError> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a.ln(), b.ln())).collect();
    linear_fit(&pts)
}

pub fn linear_fit(pts: &[(f64, f64)]) -> Result<(f64, f64, f64), StatsError> {
    if pts.len() < 2 {
        return Err(StatsError::TooFewPoints { needed: 2, got: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let c = my - slope * mx;
    let stderr = if pts.len() > 2 {
        let rss: f64 = pts.iter().map(|p| (p.1 - c - slope * p.0).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok((slope, c, stderr))
}

/// Weighted fit of `log y` on `log x` with weights `1/var(log y)`, where
/// `var(log y) ≈ (stderr_y/y)²`. Returns `(slope, stderr of slope)`.
pub fn weighted_log_log_fit(x: &[f64], y: &[f64], y_stderr: &[f64]) -> Result<(f64, f64), StatsError> {
    if x.len() < 2 {
        return Err(StatsError::TooFewPoints { needed: 2, got: x.len() });
    }
    let w: Vec<f64> = y.iter().zip(y_stderr).map(|(v, s)| (v / s).powi(2)).collect();
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let sw: f64 = w.iter().sum();
    let mx = w.iter().zip(&lx).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = w.iter().zip(&ly).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(&lx).map(|(a, b)| a * (b - mx).powi(2)).sum();
    let sxy: f64 = (0..x.len()).map(|i| w[i] * (lx[i] - mx) * (ly[i] - my)).sum();
    Ok((sxy / sxx, (1.0 / sxx).sqrt()))
}
