//! The verification checks. Each `evaluate` computes a summary without
//! touching the file system; [`run_check`] adds the artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use loctime_core::chain::MarkovShift;
use loctime_core::exact_law::{extrapolated_variance, inversion_discrepancies, potential_kernels, LawStepper};
use loctime_core::localtime::{modulus, moment_statistics_multi, occupation_of_field, simulate_fields, MomentRecord};
use loctime_core::sampling::trajectory_rng;
use loctime_core::spectral::{
    check_aperiodicity, check_aperiodicity_with_edge, default_edge, eigen_branch, green_kubo_variance,
    leading_eigenvalue, numeric_variance, symmetric_grid, SpectralBranch, SpectralError,
};
use loctime_core::stats::{ks_statistic, ks_two_sample, levy_reference_cdf, log_log_fit, weighted_log_log_fit, Cdf};
use loctime_core::{exact_law, local_limit_scan, models, AperiodicityReport};
use num_complex::Complex64;
use rand_core::RngCore;
use serde::Serialize;

use crate::config::{CheckName, ExperimentConfig};
use crate::{Format, HarnessError};

pub type Metrics = BTreeMap<String, f64>;

pub const BRANCH_HALF: usize = 512;
pub const APERIODICITY_SCAN: usize = 256;
pub const INVERSION_N_MAX: usize = 256;
pub const INVERSION_TOL: f64 = 1e-8;
pub const VARIANCE_TOL: f64 = 1e-3;
pub const LLT_SLOPE_MAX: f64 = 0.02;
pub const LLT_TOL: f64 = 0.1;
pub const KERNEL_HORIZON: usize = 4096;
pub const KERNEL_CAUCHY_TOL: f64 = 0.05;
pub const KERNEL_LINEAR_TOL: f64 = 0.25;
pub const M6_SPREAD_MAX: f64 = 2.0;
pub const OCCUPATION_MEAN_MAX: f64 = 0.05;
pub const OCCUPATION_HALVING_TOL: f64 = 0.3;
pub const MODULUS_H: f64 = 2.0;
pub const MODULUS_LEVEL: f64 = 0.5;
pub const KS_TOL: f64 = 0.05;
pub const ORACLE_N: usize = 100_000;
pub const ORACLE_SAMPLES: usize = 10_000;
pub const CROSS_LEVEL: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub metrics: Metrics,
    pub artifacts: Vec<PathBuf>,
}

fn fail(check: CheckName, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Check { check, message: e.to_string() }
}

/// Independent seed for stream family `tag` of a check.
pub fn sub_seed(seed: u64, check: CheckName, tag: u64) -> u64 {
    trajectory_rng(seed, u64::MAX - ((check as u64) << 32 | tag)).next_u64()
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

#[derive(Debug, Clone)]
pub struct SpectralSummary {
    pub branch: SpectralBranch<f64>,
    pub green_kubo: f64,
    pub numeric: f64,
    pub exact_law: f64,
    pub lambda0_error: f64,
    pub v0_error: f64,
    pub max_abs_lambda: f64,
    pub conjugation_error: f64,
    pub re_derivative: f64,
    /// `|λ_t − (1 − σ²t²/2)|/t²` at `t = 2^−2, …, 2^−10`.
    pub scaled_residuals: Vec<f64>,
}

impl SpectralSummary {
    /// The branch grid excludes `t = ±π`.
    pub fn open_grid(&self) -> bool {
        self.branch.grid.len() < 2 * BRANCH_HALF + 1
    }

    pub fn evaluate(shift: &MarkovShift<f64>) -> Result<Self, HarnessError> {
        let mut grid = symmetric_grid::<f64>(BRANCH_HALF);
        let branch = match eigen_branch(shift, &grid) {
            // m(v_π) = 0 happens (e.g. negatively correlated increments);
            // the branch is then only defined on the open circle.
            Err(SpectralError::NormalizationVanishes { t }) if t.abs() == std::f64::consts::PI => {
                grid = grid[1..grid.len() - 1].to_vec();
                eigen_branch(shift, &grid)
            }
            other => other,
        }
        .map_err(|e| fail(CheckName::Spectral, e))?;
        let z = branch.zero_index();
        let one = Complex64::new(1.0, 0.0);
        let last = grid.len() - 1;
        let conjugation_error =
            (0..grid.len()).map(|k| (branch.lambda[last - k] - branch.lambda[k].conj()).norm()).fold(0.0, f64::max);
        let re_derivative =
            branch.derivative_at_zero().map(|d| d.iter().map(|v| v.re * v.re).sum::<f64>().sqrt()).unwrap_or(f64::NAN);
        let green_kubo = green_kubo_variance(shift).map_err(|e| fail(CheckName::Spectral, e))?;
        let scaled_residuals = (2..=10)
            .map(|k| {
                let t = 2f64.powi(-k);
                let l = leading_eigenvalue(shift, t).map_err(|e| fail(CheckName::Spectral, e))?;
                Ok((l - Complex64::new(1.0 - green_kubo * t * t / 2.0, 0.0)).norm() / (t * t))
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        Ok(Self {
            lambda0_error: (branch.lambda[z] - one).norm(),
            v0_error: branch.eigenfunction[z].iter().map(|v| (v - one).norm()).fold(0.0, f64::max),
            max_abs_lambda: branch.lambda.iter().map(|l| l.norm()).fold(0.0, f64::max),
            conjugation_error,
            re_derivative,
            green_kubo,
            numeric: numeric_variance(shift).map_err(|e| fail(CheckName::Spectral, e))?,
            exact_law: extrapolated_variance(shift).map_err(|e| fail(CheckName::Spectral, e))?,
            scaled_residuals,
            branch,
        })
    }

    pub fn sigma2(&self) -> f64 {
        self.green_kubo
    }

    pub fn max_disagreement(&self) -> f64 {
        let (a, b, c) = (self.green_kubo, self.numeric, self.exact_law);
        relative(a, b).max(relative(a, c)).max(relative(b, c))
    }

    /// The residual shrinks at every halving of `t` and ends two orders of
    /// magnitude below where it started.
    pub fn residual_decays(&self) -> bool {
        let r = &self.scaled_residuals;
        r.windows(2).all(|w| w[1] < w[0]) && r[r.len() - 1] < 1e-2 * r[0]
    }

    pub fn invariants_hold(&self) -> bool {
        self.lambda0_error < 1e-12
            && self.v0_error < 1e-12
            && self.max_abs_lambda <= 1.0 + 1e-12
            && self.conjugation_error < 1e-10
            && self.re_derivative < 1e-6
            && self.residual_decays()
    }

    pub fn passed(&self) -> bool {
        self.invariants_hold() && self.max_disagreement() < VARIANCE_TOL
    }

    pub fn metrics(&self) -> Metrics {
        let r = &self.scaled_residuals;
        Metrics::from([
            ("sigma2".into(), self.green_kubo),
            ("sigma2_green_kubo".into(), self.green_kubo),
            ("sigma2_numeric".into(), self.numeric),
            ("sigma2_exact_law".into(), self.exact_law),
            ("sigma2_max_rel_disagreement".into(), self.max_disagreement()),
            ("lambda0_error".into(), self.lambda0_error),
            ("v0_error".into(), self.v0_error),
            ("open_grid".into(), self.open_grid() as u8 as f64),
            ("max_abs_lambda".into(), self.max_abs_lambda),
            ("conjugation_error".into(), self.conjugation_error),
            ("re_v0_derivative".into(), self.re_derivative),
            ("quadratic_residual_first".into(), r[0]),
            ("quadratic_residual_last".into(), r[r.len() - 1]),
        ])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AperiodicitySummary {
    pub report: AperiodicityReport,
    /// Scans at `APERIODICITY_SCAN` and twice that, both excluding the same
    /// neighbourhood of `t = 0`.
    pub fixed_edge: (AperiodicityReport, AperiodicityReport),
}

impl AperiodicitySummary {
    pub fn evaluate(shift: &MarkovShift<f64>) -> Result<Self, HarnessError> {
        let edge = default_edge(APERIODICITY_SCAN);
        Ok(Self {
            report: check_aperiodicity(shift, APERIODICITY_SCAN).map_err(|e| fail(CheckName::Aperiodicity, e))?,
            fixed_edge: (
                check_aperiodicity_with_edge(shift, APERIODICITY_SCAN, edge)
                    .map_err(|e| fail(CheckName::Aperiodicity, e))?,
                check_aperiodicity_with_edge(shift, 2 * APERIODICITY_SCAN, edge)
                    .map_err(|e| fail(CheckName::Aperiodicity, e))?,
            ),
        })
    }

    pub fn stability(&self) -> f64 {
        let (a, b) = self.fixed_edge;
        (a.min_gap - b.min_gap).abs() / b.min_gap
    }

    pub fn passed(&self) -> bool {
        self.report.is_aperiodic && self.stability() <= 0.1
    }

    pub fn metrics(&self) -> Metrics {
        Metrics::from([
            ("is_aperiodic".into(), self.report.is_aperiodic as u8 as f64),
            ("min_gap".into(), self.report.min_gap),
            ("offending_t".into(), self.report.offending_t),
            ("min_gap_fixed_edge".into(), self.fixed_edge.0.min_gap),
            ("min_gap_fixed_edge_doubled".into(), self.fixed_edge.1.min_gap),
            ("min_gap_rel_change".into(), self.stability()),
        ])
    }
}

#[derive(Debug, Clone)]
pub struct ExactLawSummary {
    /// Max over levels of |DP − inversion| at `n = 1..=n_max`.
    pub discrepancies: Vec<f64>,
}

impl ExactLawSummary {
    pub fn evaluate(shift: &MarkovShift<f64>, n_max: usize) -> Result<Self, HarnessError> {
        let discrepancies = inversion_discrepancies(shift, n_max).map_err(|e| fail(CheckName::ExactLaw, e))?;
        Ok(Self { discrepancies })
    }

    pub fn worst(&self) -> (usize, f64) {
        self.discrepancies.iter().enumerate().fold((0, 0.0), |best, (i, &d)| if d > best.1 { (i + 1, d) } else { best })
    }

    pub fn passed(&self) -> bool {
        self.worst().1 < INVERSION_TOL
    }

    pub fn metrics(&self) -> Metrics {
        let (n, d) = self.worst();
        Metrics::from([
            ("n_max".into(), self.discrepancies.len() as f64),
            ("max_discrepancy".into(), d),
            ("worst_n".into(), n as f64),
        ])
    }
}

#[derive(Debug, Clone)]
pub struct LocalLimitSummary {
    pub n_values: Vec<usize>,
    /// `max_x √n·P(S_n = x)` per `n`.
    pub maxima: Vec<f64>,
    pub slope: f64,
    pub slope_stderr: f64,
    /// `√n·P(S_n = 0)` at the largest `n` and its Gaussian prediction.
    pub at_zero: f64,
    pub predicted: f64,
    pub rows: Vec<loctime_core::exact_law::LocalLimitRow>,
}

impl LocalLimitSummary {
    pub fn evaluate(shift: &MarkovShift<f64>, n_values: &[usize], levels: &[i64]) -> Result<Self, HarnessError> {
        let mut ns = n_values.to_vec();
        ns.sort_unstable();
        ns.dedup();
        let mut st = LawStepper::new(shift);
        let maxima = ns
            .iter()
            .map(|&n| Ok(st.advance_to(n).map_err(|e| fail(CheckName::LocalLimit, e))?.max_scaled()))
            .collect::<Result<Vec<f64>, HarnessError>>()?;
        let nf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let (slope, _, slope_stderr) = log_log_fit(&nf, &maxima).map_err(|e| fail(CheckName::LocalLimit, e))?;
        let mut xs = levels.to_vec();
        if !xs.contains(&0) {
            xs.insert(0, 0);
        }
        let rows = local_limit_scan(shift, &ns, &xs).map_err(|e| fail(CheckName::LocalLimit, e))?;
        let last = rows.iter().find(|r| r.n == ns[ns.len() - 1] && r.x == 0).expect("level 0 is scanned");
        Ok(Self {
            at_zero: last.sqrtn_prob,
            predicted: last.gaussian_pred,
            n_values: ns,
            maxima,
            slope,
            slope_stderr,
            rows,
        })
    }

    pub fn relative_error(&self) -> f64 {
        (self.at_zero / self.predicted - 1.0).abs()
    }

    pub fn passed(&self) -> bool {
        self.slope < LLT_SLOPE_MAX && self.relative_error() < LLT_TOL
    }

    pub fn metrics(&self) -> Metrics {
        Metrics::from([
            ("max_slope".into(), self.slope),
            ("max_slope_stderr".into(), self.slope_stderr),
            ("max_scaled_largest".into(), self.maxima.iter().copied().fold(0.0, f64::max)),
            ("sqrtn_p0".into(), self.at_zero),
            ("gaussian_pred".into(), self.predicted),
            ("rel_error".into(), self.relative_error()),
        ])
    }
}

#[derive(Debug, Clone)]
pub struct KernelSummary {
    pub horizon: usize,
    pub curves: Vec<loctime_core::exact_law::KernelCurve<f64>>,
}

impl KernelSummary {
    /// Partial sums up to twice `horizon`, for the Cauchy comparison.
    pub fn evaluate(shift: &MarkovShift<f64>, pairs: &[(i64, i64)], horizon: usize) -> Result<Self, HarnessError> {
        let curves = potential_kernels(shift, 2 * horizon, pairs).map_err(|e| fail(CheckName::PotentialKernel, e))?;
        Ok(Self { horizon, curves })
    }

    /// Relative change of each curve between `N` and `2N`.
    pub fn cauchy(&self) -> Vec<f64> {
        self.curves
            .iter()
            .map(|c| {
                let a = c.at(self.horizon);
                (c.at(2 * self.horizon) - a) / a
            })
            .collect()
    }

    /// Largest relative deviation of the values at `N` from the least
    /// squares line through the origin in `|x − y|`. With `with_start`
    /// the `n = 0` term `|1{x=0} − 1{y=0}|` is added to each sum first.
    pub fn linearity(&self, with_start: bool) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .curves
            .iter()
            .map(|c| {
                let start = if with_start { ((c.x == 0) != (c.y == 0)) as u8 as f64 } else { 0.0 };
                (c.x.abs_diff(c.y) as f64, c.at(self.horizon) + start)
            })
            .collect();
        let slope = pts.iter().map(|(d, a)| d * a).sum::<f64>() / pts.iter().map(|(d, _)| d * d).sum::<f64>();
        pts.iter().map(|(d, a)| (a / (slope * d) - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.cauchy().iter().all(|&c| c < KERNEL_CAUCHY_TOL) && self.linearity(false) <= KERNEL_LINEAR_TOL
    }

    pub fn metrics(&self) -> Metrics {
        let mut m = Metrics::new();
        for (c, cauchy) in self.curves.iter().zip(self.cauchy()) {
            m.insert(format!("sum_x{}_y{}", c.x, c.y), c.at(self.horizon));
            m.insert(format!("cauchy_x{}_y{}", c.x, c.y), cauchy);
        }
        m.insert("horizon".into(), self.horizon as f64);
        m.insert("linearity_deviation".into(), self.linearity(false));
        m.insert("linearity_deviation_with_n0".into(), self.linearity(true));
        m
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailFit {
    pub n: usize,
    pub eps: f64,
    pub slope: f64,
    pub slope_stderr: f64,
}

#[derive(Debug, Clone)]
pub struct MomentsSummary {
    pub records: Vec<MomentRecord>,
    pub tail_fits: Vec<TailFit>,
}

impl MomentsSummary {
    /// `samples[i]` trajectories at `n_values[i]`.
    pub fn evaluate(
        shift: &MarkovShift<f64>,
        n_values: &[usize],
        samples: &[usize],
        pairs: &[(i64, i64)],
        eps: &[f64],
        seed: u64,
    ) -> Result<Self, HarnessError> {
        let mut records = Vec::new();
        let mut tail_fits = Vec::new();
        for (i, (&n, &count)) in n_values.iter().zip(samples).enumerate() {
            let seed = sub_seed(seed, CheckName::Moments, i as u64);
            let recs =
                moment_statistics_multi(shift, n, pairs, eps, count, seed).map_err(|e| fail(CheckName::Moments, e))?;
            let mut distances: Vec<u64> = pairs.iter().map(|(x, y)| x.abs_diff(*y)).collect();
            distances.sort_unstable();
            distances.dedup();
            if distances.len() >= 2 {
                for &e in eps {
                    let d: Vec<f64> = recs.iter().map(|r| r.x.abs_diff(r.y) as f64).collect();
                    let tail = |r: &MomentRecord| *r.tail(e).expect("every eps is recorded");
                    let p: Vec<f64> = recs.iter().map(|r| tail(r).prob).collect();
                    let se: Vec<f64> = recs.iter().map(|r| tail(r).stderr).collect();
                    let (slope, slope_stderr) =
                        weighted_log_log_fit(&d, &p, &se).map_err(|e| fail(CheckName::Moments, e))?;
                    tail_fits.push(TailFit { n, eps: e, slope, slope_stderr });
                }
            }
            records.extend(recs);
        }
        Ok(Self { records, tail_fits })
    }

    /// `max/min` of `m6/rhs` across `n` for each level pair.
    pub fn ratio_spreads(&self) -> Vec<((i64, i64), f64)> {
        let mut by_pair: BTreeMap<(i64, i64), Vec<f64>> = BTreeMap::new();
        for r in &self.records {
            by_pair.entry((r.x, r.y)).or_default().push(r.ratio);
        }
        by_pair
            .into_iter()
            .map(|(p, v)| {
                let hi = v.iter().copied().fold(f64::MIN, f64::max);
                let lo = v.iter().copied().fold(f64::MAX, f64::min);
                (p, hi / lo)
            })
            .collect()
    }

    pub fn ratio_stable(&self) -> bool {
        self.ratio_spreads().iter().all(|(_, s)| *s <= M6_SPREAD_MAX)
    }

    pub fn tails_in_range(&self) -> bool {
        self.tail_fits.iter().all(|f| f.slope > 1.0 && f.slope < 2.0)
    }

    pub fn passed(&self) -> bool {
        self.ratio_stable() && self.tails_in_range()
    }

    pub fn metrics(&self) -> Metrics {
        let mut m = Metrics::new();
        for ((x, y), s) in self.ratio_spreads() {
            m.insert(format!("ratio_spread_x{x}_y{y}"), s);
        }
        for r in &self.records {
            m.insert(format!("ratio_n{}_x{}_y{}", r.n, r.x, r.y), r.ratio);
        }
        for f in &self.tail_fits {
            m.insert(format!("tail_exponent_n{}_eps{}", f.n, f.eps), f.slope);
            m.insert(format!("tail_exponent_stderr_n{}_eps{}", f.n, f.eps), f.slope_stderr);
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccupationRow {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub mean_abs_diff: f64,
    pub max_abs_diff: f64,
    pub min_slack: f64,
    pub violations: u64,
}

#[derive(Debug, Clone)]
pub struct OccupationSummary {
    pub rows: Vec<OccupationRow>,
    /// Mean `|ν − ∫l_n|` over trajectories and intervals, per `n`.
    pub means: Vec<(usize, f64)>,
}

impl OccupationSummary {
    pub fn evaluate(
        shift: &MarkovShift<f64>,
        n_values: &[usize],
        samples: &[usize],
        intervals: &[(f64, f64)],
        seed: u64,
    ) -> Self {
        let mut rows = Vec::new();
        let mut means = Vec::new();
        for (i, (&n, &count)) in n_values.iter().zip(samples).enumerate() {
            let seed = sub_seed(seed, CheckName::Occupation, i as u64);
            let per_path: Vec<Vec<(f64, f64)>> = simulate_fields(shift, n, count, seed, |_, f| {
                intervals
                    .iter()
                    .map(|&(a, b)| {
                        let o = occupation_of_field(f, a, b);
                        (o.difference(), o.slack(n))
                    })
                    .collect()
            });
            let mut all = Vec::with_capacity(count * intervals.len());
            for (k, &(a, b)) in intervals.iter().enumerate() {
                let diffs: Vec<f64> = per_path.iter().map(|p| p[k].0).collect();
                let slacks = per_path.iter().map(|p| p[k].1);
                rows.push(OccupationRow {
                    n,
                    a,
                    b,
                    mean_abs_diff: loctime_core::stats::pairwise_sum(&diffs) / count as f64,
                    max_abs_diff: diffs.iter().copied().fold(0.0, f64::max),
                    min_slack: slacks.clone().fold(f64::INFINITY, f64::min),
                    violations: slacks.filter(|&s| s < 0.0).count() as u64,
                });
                all.extend(diffs);
            }
            means.push((n, loctime_core::stats::pairwise_sum(&all) / all.len() as f64));
        }
        Self { rows, means }
    }

    pub fn violations(&self) -> u64 {
        self.rows.iter().map(|r| r.violations).sum()
    }

    /// `mean(n)/mean(4n)` for every `n` whose quadruple was also run.
    pub fn halving_ratios(&self) -> Vec<(usize, f64)> {
        self.means
            .iter()
            .filter_map(|&(n, m)| self.means.iter().find(|(n4, _)| *n4 == 4 * n).map(|&(_, m4)| (n, m / m4)))
            .collect()
    }

    pub fn largest_mean(&self) -> f64 {
        self.means.iter().max_by_key(|(n, _)| *n).expect("at least one n").1
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
            && self.largest_mean() < OCCUPATION_MEAN_MAX
            && self.halving_ratios().iter().all(|(_, r)| (r / 2.0 - 1.0).abs() <= OCCUPATION_HALVING_TOL)
    }

    pub fn metrics(&self) -> Metrics {
        let mut m = Metrics::from([
            ("violations".into(), self.violations() as f64),
            ("min_slack".into(), self.rows.iter().map(|r| r.min_slack).fold(f64::INFINITY, f64::min)),
        ]);
        for &(n, v) in &self.means {
            m.insert(format!("mean_abs_diff_n{n}"), v);
        }
        for (n, r) in self.halving_ratios() {
            m.insert(format!("halving_ratio_n{n}"), r);
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulusRow {
    pub delta: f64,
    /// `P(ω'(δ) ≥ MODULUS_LEVEL)`.
    pub prob_omega_prime: f64,
    /// `P(ω(2δ) ≥ MODULUS_LEVEL)`.
    pub prob_omega: f64,
    pub mean_omega_prime: f64,
    pub mean_omega: f64,
    pub violations: u64,
}

#[derive(Debug, Clone)]
pub struct ModulusSummary {
    pub n: usize,
    /// Ordered by decreasing `δ`.
    pub rows: Vec<ModulusRow>,
}

impl ModulusSummary {
    pub fn evaluate(shift: &MarkovShift<f64>, n: usize, samples: usize, deltas: &[f64], seed: u64) -> Self {
        let mut deltas = deltas.to_vec();
        deltas.sort_by(|a, b| b.total_cmp(a));
        let seed = sub_seed(seed, CheckName::Modulus, 0);
        let per_path: Vec<Vec<(f64, f64)>> = simulate_fields(shift, n, samples, seed, |_, f| {
            deltas
                .iter()
                .map(|&d| {
                    let r = modulus(f, MODULUS_H, d);
                    (r.omega_prime, r.omega)
                })
                .collect()
        });
        let count = samples as f64;
        let rows = deltas
            .iter()
            .enumerate()
            .map(|(k, &delta)| {
                let wp: Vec<f64> = per_path.iter().map(|p| p[k].0).collect();
                let w: Vec<f64> = per_path.iter().map(|p| p[k].1).collect();
                ModulusRow {
                    delta,
                    prob_omega_prime: wp.iter().filter(|&&v| v >= MODULUS_LEVEL).count() as f64 / count,
                    prob_omega: w.iter().filter(|&&v| v >= MODULUS_LEVEL).count() as f64 / count,
                    mean_omega_prime: loctime_core::stats::pairwise_sum(&wp) / count,
                    mean_omega: loctime_core::stats::pairwise_sum(&w) / count,
                    violations: wp.iter().zip(&w).filter(|(a, b)| a > b).count() as u64,
                }
            })
            .collect();
        Self { n, rows }
    }

    pub fn violations(&self) -> u64 {
        self.rows.iter().map(|r| r.violations).sum()
    }

    /// `P(ω'(δ) ≥ level)` never increases as `δ` shrinks.
    pub fn tail_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].prob_omega_prime <= w[0].prob_omega_prime)
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0 && self.tail_monotone()
    }

    pub fn metrics(&self) -> Metrics {
        let mut m = Metrics::from([
            ("n".into(), self.n as f64),
            ("violations".into(), self.violations() as f64),
            ("tail_monotone".into(), self.tail_monotone() as u8 as f64),
        ]);
        for r in &self.rows {
            m.insert(format!("prob_omega_prime_delta{}", r.delta), r.prob_omega_prime);
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfRow {
    pub l: f64,
    pub empirical_cdf: f64,
    pub reference_cdf: f64,
}

#[derive(Debug, Clone)]
pub struct LevySummary {
    pub n: usize,
    pub sigma2: f64,
    pub ks: f64,
    pub oracle_ks: f64,
    /// Two-sample KS at level `CROSS_LEVEL` against a chain of the same `σ²`,
    /// when one is available.
    pub cross_ks: Option<f64>,
    pub cdf: Vec<CdfRow>,
}

/// Sorted `l_n(x)` over `samples` trajectories.
pub fn level_sample(shift: &MarkovShift<f64>, n: usize, samples: usize, x: f64, seed: u64) -> Vec<f64> {
    let mut v = simulate_fields(shift, n, samples, seed, |_, f| f.l(x));
    v.sort_by(f64::total_cmp);
    v
}

/// KS distance of `l_n(0)` for the iid ±1 walk from the `σ² = 1` reference.
pub fn oracle_ks(n: usize, samples: usize, seed: u64) -> f64 {
    let v = level_sample(&models::coin_walk(), n, samples, 0.0, seed);
    ks_statistic(&v, &levy_reference_cdf(1.0).expect("positive")).expect("nonempty")
}

impl LevySummary {
    pub fn evaluate(
        shift: &MarkovShift<f64>,
        sigma2: f64,
        n: usize,
        samples: usize,
        seed: u64,
    ) -> Result<Self, HarnessError> {
        let reference = levy_reference_cdf(sigma2).map_err(|e| fail(CheckName::LevyKs, e))?;
        let values = level_sample(shift, n, samples, 0.0, sub_seed(seed, CheckName::LevyKs, 0));
        let ks = ks_statistic(&values, &reference).map_err(|e| fail(CheckName::LevyKs, e))?;
        let oracle_ks = oracle_ks(ORACLE_N, ORACLE_SAMPLES.min(samples), sub_seed(seed, CheckName::LevyKs, 1));
        let cross_ks = match models::three_state_with_variance::<f64>(sigma2) {
            Some(companion) => {
                let a = level_sample(shift, n, samples, CROSS_LEVEL, sub_seed(seed, CheckName::LevyKs, 2));
                let b = level_sample(&companion, n, samples, CROSS_LEVEL, sub_seed(seed, CheckName::LevyKs, 3));
                Some(ks_two_sample(&a, &b).map_err(|e| fail(CheckName::LevyKs, e))?)
            }
            None => None,
        };
        let mut cdf = Vec::new();
        let total = values.len() as f64;
        for (i, &v) in values.iter().enumerate() {
            if values.get(i + 1) != Some(&v) {
                cdf.push(CdfRow { l: v, empirical_cdf: (i + 1) as f64 / total, reference_cdf: reference.cdf(v) });
            }
        }
        Ok(Self { n, sigma2, ks, oracle_ks, cross_ks, cdf })
    }

    pub fn passed(&self) -> bool {
        self.ks < KS_TOL && self.oracle_ks < KS_TOL && self.cross_ks.is_none_or(|d| d < KS_TOL)
    }

    pub fn metrics(&self) -> Metrics {
        let mut m = Metrics::from([
            ("n".into(), self.n as f64),
            ("sigma2".into(), self.sigma2),
            ("ks".into(), self.ks),
            ("oracle_ks".into(), self.oracle_ks),
        ]);
        if let Some(d) = self.cross_ks {
            m.insert("cross_model_ks".into(), d);
        }
        m
    }
}

/// What a check needs besides its config.
pub struct Context<'a> {
    pub shift: &'a MarkovShift<f64>,
    pub config: &'a ExperimentConfig,
    pub out: &'a Path,
    pub format: Format,
    pub sigma2: Option<f64>,
}

impl Context<'_> {
    fn sigma2(&self, check: CheckName) -> Result<f64, HarnessError> {
        self.sigma2.ok_or(HarnessError::Check { check, message: "σ² is not available".into() })
    }

    fn samples(&self) -> Vec<usize> {
        (0..self.config.n_values.len()).map(|i| self.config.samples(i)).collect()
    }
}

fn outcome(passed: bool, metrics: Metrics, artifacts: Vec<PathBuf>) -> Result<Outcome, HarnessError> {
    Ok(Outcome { passed, metrics, artifacts })
}

pub fn run_check(name: CheckName, ctx: &Context) -> Result<Outcome, HarnessError> {
    let (shift, config, out, format) = (ctx.shift, ctx.config, ctx.out, ctx.format);
    match name {
        CheckName::Spectral => {
            let s = SpectralSummary::evaluate(shift)?;
            let branch = format.write(out, "spectral", &s.branch.rows())?;
            outcome(s.passed(), s.metrics(), vec![branch])
        }
        CheckName::Aperiodicity => {
            let s = AperiodicitySummary::evaluate(shift)?;
            let path = out.join("aperiodicity.json");
            s.report.write_json(&path)?;
            outcome(s.passed(), s.metrics(), vec![path])
        }
        CheckName::ExactLaw => {
            let s = ExactLawSummary::evaluate(shift, INVERSION_N_MAX)?;
            let mut artifacts = Vec::new();
            for &n in &config.n_values {
                let law = exact_law(shift, n).map_err(|e| fail(name, e))?;
                artifacts.push(format.write(out, &format!("exact_law_n{n}"), &law.rows(shift.states()))?);
            }
            outcome(s.passed(), s.metrics(), artifacts)
        }
        CheckName::LocalLimit => {
            let s = LocalLimitSummary::evaluate(shift, &config.n_values, &config.x_levels)?;
            let path = format.write(out, "local_limit", &s.rows)?;
            let mut m = s.metrics();
            m.insert("sigma2".into(), ctx.sigma2(name)?);
            outcome(s.passed(), m, vec![path])
        }
        CheckName::PotentialKernel => {
            let s = KernelSummary::evaluate(shift, &config.level_pairs(), KERNEL_HORIZON)?;
            let artifacts = s
                .curves
                .iter()
                .map(|c| format.write(out, &format!("potential_kernel_x{}_y{}", c.x, c.y), &c.rows()))
                .collect::<Result<Vec<_>, _>>()?;
            let mut m = s.metrics();
            m.insert("sigma2".into(), ctx.sigma2(name)?);
            outcome(s.passed(), m, artifacts)
        }
        CheckName::Moments => {
            let s = MomentsSummary::evaluate(
                shift,
                &config.n_values,
                &ctx.samples(),
                &config.level_pairs(),
                &config.eps_grid,
                config.seed,
            )?;
            let mut artifacts = Vec::new();
            for r in &s.records {
                let path = out.join(format!("moments_n{}_x{}_y{}.json", r.n, r.x, r.y));
                r.write_json(&path)?;
                artifacts.push(path);
            }
            if !s.tail_fits.is_empty() {
                artifacts.push(format.write(out, "moments_tail_fit", &s.tail_fits)?);
            }
            outcome(s.passed(), s.metrics(), artifacts)
        }
        CheckName::Occupation => {
            let s =
                OccupationSummary::evaluate(shift, &config.n_values, &ctx.samples(), &config.intervals, config.seed);
            let path = format.write(out, "occupation", &s.rows)?;
            outcome(s.passed(), s.metrics(), vec![path])
        }
        CheckName::Modulus => {
            let (n, samples) = config.largest();
            let s = ModulusSummary::evaluate(shift, n, samples, &config.delta_grid, config.seed);
            let path = format.write(out, "modulus", &s.rows)?;
            outcome(s.passed(), s.metrics(), vec![path])
        }
        CheckName::LevyKs => {
            let (n, samples) = config.largest();
            let s = LevySummary::evaluate(shift, ctx.sigma2(name)?, n, samples, config.seed)?;
            let path = format.write(out, "levy_ks", &s.cdf)?;
            outcome(s.passed(), s.metrics(), vec![path])
        }
    }
}
