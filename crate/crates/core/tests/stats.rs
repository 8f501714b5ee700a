use loctime_core::localtime::simulate_fields;
use loctime_core::models;
use loctime_core::sampling::trajectory_rng;
use loctime_core::stats::{
    ks_statistic, ks_two_sample, levy_reference_cdf, linear_fit, log_log_fit, mean_stderr, pairwise_sum,
    weighted_log_log_fit, Cdf, FnCdf, PointMass, StatsError,
};
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

fn abs_normal(count: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = trajectory_rng(seed, 0);
    let mut v: Vec<f64> = (0..count)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z.abs() / sigma
        })
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn reference_cdf_values() {
    let f = levy_reference_cdf(1.0).unwrap();
    assert_eq!(f.cdf(-1.0), 0.0);
    assert_eq!(f.cdf(0.0), 0.0);
    // 2Φ(1) − 1 and 2Φ(1.96) − 1.
    assert!((f.cdf(1.0) - 0.682_689_492_137_085_9).abs() < 1e-14);
    assert!((f.cdf(1.96) - 0.950_004_209_703_558_5).abs() < 1e-14);
    let g = levy_reference_cdf(4.0).unwrap();
    assert!((g.cdf(0.5) - f.cdf(1.0)).abs() < 1e-15);
    assert_eq!(levy_reference_cdf(0.0).unwrap_err(), StatsError::VarianceZero(0.0));
    assert!(levy_reference_cdf(f64::NAN).is_err());
}

#[test]
fn exact_sample_passes_ks() {
    for (sigma2, seed) in [(1.0, 1), (0.5, 2), (2.75, 3)] {
        let f = levy_reference_cdf(sigma2).unwrap();
        let d = ks_statistic(&abs_normal(100_000, f.sigma(), seed), &f).unwrap();
        assert!(d < 0.0062, "σ² = {sigma2}: {d}");
    }
}

#[test]
fn wrong_scale_fails_ks() {
    let f = levy_reference_cdf(1.0).unwrap();
    let d = ks_statistic(&abs_normal(100_000, 1.1, 4), &f).unwrap();
    assert!(d > 0.03, "{d}");
}

#[test]
fn coin_walk_visits_to_zero_follow_the_reference() {
    let s = models::coin_walk::<f64>();
    let n = 10_000;
    let mut v = simulate_fields(&s, n, 20_000, 6, |_, f| f.l(0.0));
    v.sort_by(f64::total_cmp);
    let d = ks_statistic(&v, &levy_reference_cdf(1.0).unwrap()).unwrap();
    assert!(d < 0.02, "{d}");
}

#[test]
fn ks_examples() {
    assert_eq!(ks_statistic(&[0.5], &FnCdf(|x: f64| x.clamp(0.0, 1.0))).unwrap(), 0.5);
    assert_eq!(ks_statistic(&[1.0, 1.0], &PointMass(1.0)).unwrap(), 0.0);
    assert_eq!(ks_statistic(&[2.0], &PointMass(1.0)).unwrap(), 1.0);
    assert_eq!(ks_statistic(&[], &PointMass(1.0)).unwrap_err(), StatsError::EmptySample);
    assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
    assert_eq!(ks_two_sample(&[1.0, 3.0], &[2.0, 4.0]).unwrap(), 0.5);
}

#[test]
fn fits_recover_known_lines() {
    let x = [1.0, 2.0, 4.0, 8.0, 16.0];
    let y = x.map(|v: f64| 3.0 * v.powf(1.5));
    let (slope, c, se) = log_log_fit(&x, &y).unwrap();
    assert!((slope - 1.5).abs() < 1e-12 && (c - 3f64.ln()).abs() < 1e-12 && se < 1e-12);
    let (ws, _) = weighted_log_log_fit(&x, &y, &y.map(|v| 0.1 * v)).unwrap();
    assert!((ws - 1.5).abs() < 1e-12);
    assert_eq!(linear_fit(&[(0.0, 1.0)]).unwrap_err(), StatsError::TooFewPoints { needed: 2, got: 1 });
    assert!(linear_fit(&[(0.0, 1.0), (1.0, 3.0)]).unwrap().2.is_nan());
}

#[test]
fn mean_and_stderr() {
    let (m, se) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(m, 2.5);
    assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    assert!(mean_stderr(&[]).0.is_nan());
    assert!(mean_stderr(&[1.0]).1.is_nan());
}

proptest! {
    #[test]
    fn pairwise_sum_of_integers_is_exact(v in prop::collection::vec(-1000i32..1000, 0..500)) {
        let f: Vec<f64> = v.iter().map(|&x| x as f64).collect();
        prop_assert_eq!(pairwise_sum(&f), v.iter().map(|&x| x as i64).sum::<i64>() as f64);
    }

    #[test]
    fn ks_is_a_distance(mut a in prop::collection::vec(-5.0f64..5.0, 1..60), mut b in prop::collection::vec(-5.0f64..5.0, 1..60)) {
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let d = ks_two_sample(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks_two_sample(&b, &a).unwrap());
        prop_assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        let f = FnCdf(|x: f64| ((x + 5.0) / 10.0).clamp(0.0, 1.0));
        prop_assert!((0.0..=1.0).contains(&ks_statistic(&a, &f).unwrap()));
    }
}
