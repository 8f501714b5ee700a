use std::time::Instant;

use loctime_core::chain::MarkovShift;
use loctime_core::exact_law::{
    characteristic_function, exact_law_with_cap, extrapolated_variance, inversion_discrepancies, inversion_marginals,
    inversion_points, potential_kernels, LawStepper,
};
use loctime_core::linalg::Matrix;
use loctime_core::stats::log_log_fit;
use loctime_core::{
    build_chain, exact_law, law_via_inversion, local_limit_scan, models, potential_kernel, ExactLawError,
};
use proptest::prelude::*;

fn test_chains() -> Vec<(&'static str, MarkovShift<f64>)> {
    vec![
        ("lazy", models::lazy_walk()),
        ("cyclic", models::cyclic_three_state()),
        ("correlated", models::correlated_three_state(-0.3)),
        ("skewed", models::skewed_four_state()),
    ]
}

#[test]
fn lazy_walk_enumerations() {
    let s = models::lazy_walk::<f64>();
    let l1 = exact_law(&s, 1).unwrap();
    assert_eq!((l1.marginal(-1), l1.marginal(0), l1.marginal(1)), (0.25, 0.5, 0.25));
    assert_eq!(exact_law(&s, 2).unwrap().marginal(0), 0.375);
    assert!((law_via_inversion(&s, 2, 0).unwrap() - 0.375).abs() < 1e-8);
}

#[test]
fn law_invariants() {
    for (name, s) in test_chains() {
        for n in [1, 7, 100, 333] {
            let l = exact_law(&s, n).unwrap();
            assert_eq!(l.support_min, n as i64 * s.phi_min());
            assert_eq!(l.support_max, n as i64 * s.phi_max());
            assert!((l.total_mass() - 1.0).abs() < 1e-12, "{name} n={n}");
            for k in 0..s.len() {
                assert!((l.state_marginal(k) - s.stationary()[k]).abs() < 1e-10, "{name} n={n}");
                assert!((l.support_min..=l.support_max).all(|x| l.prob(x, k) >= 0.0));
            }
            assert!(l.mean().abs() < 1e-9 * n as f64, "{name} n={n}");
        }
    }
}

#[test]
fn out_of_support_inversion_is_zero() {
    for (name, s) in test_chains() {
        for x in [s.phi_min() - 1, s.phi_max() + 1, 40] {
            assert!(law_via_inversion(&s, 1, x).unwrap().abs() < 1e-10, "{name} x={x}");
        }
    }
}

#[test]
fn iid_inversion_matches_scalar_transform() {
    let s = models::doubled_lazy_walk::<f64>();
    let n = 9;
    let points = inversion_points(&s, n);
    let inv = inversion_marginals(&s, n, points);
    for (i, p) in inv.iter().enumerate() {
        let x = -18 + i as i64;
        let scalar: f64 = (0..points)
            .map(|j| {
                let t = -std::f64::consts::PI + std::f64::consts::TAU * j as f64 / points as f64;
                let c = (0.5 + 0.5 * (2.0 * t).cos()).powi(n as i32);
                c * (t * x as f64).cos()
            })
            .sum::<f64>()
            / points as f64;
        assert!((p - scalar).abs() < 1e-12, "x={x}");
    }
    let cf = characteristic_function(&s, n, 0.7);
    assert!((cf.re - (0.5 + 0.5 * 1.4f64.cos()).powi(9)).abs() < 1e-14 && cf.im.abs() < 1e-14);
}

#[test]
fn dp_matches_inversion_up_to_256() {
    for (name, s) in [("lazy", models::lazy_walk::<f64>()), ("cyclic", models::cyclic_three_state())] {
        let start = Instant::now();
        let worst = inversion_discrepancies(&s, 256).unwrap();
        let max = worst.iter().copied().fold(0.0, f64::max);
        assert!(max < 1e-8, "{name}: {max}");
        assert!(start.elapsed().as_secs() < 60);
    }
}

#[test]
fn sweep_agrees_with_single_inversions() {
    let s = models::skewed_four_state::<f64>();
    let sweep = inversion_discrepancies(&s, 20).unwrap();
    for n in [1, 5, 20] {
        let law = exact_law(&s, n).unwrap();
        let inv = inversion_marginals(&s, n, inversion_points(&s, n));
        let worst = law.marginals().iter().zip(&inv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-12 && sweep[n - 1] < 1e-12, "n={n}: {worst} {}", sweep[n - 1]);
    }
}

#[test]
fn symmetric_laws_are_bit_symmetric() {
    for s in [models::lazy_walk::<f64>(), models::correlated_three_state(0.5), models::skewed_four_state()] {
        let l = exact_law(&s, 301).unwrap();
        for x in 0..=l.support_max {
            assert_eq!(l.marginal(x).to_bits(), l.marginal(-x).to_bits(), "x={x}");
        }
    }
}

#[test]
fn memory_cap_and_zero_steps() {
    let s = models::lazy_walk::<f64>();
    assert!(matches!(exact_law_with_cap(&s, 1000, 5000), Err(ExactLawError::MemoryCap { cells: 6003, cap: 5000 })));
    assert_eq!(exact_law(&s, 0).unwrap_err(), ExactLawError::ZeroSteps);
}

#[test]
fn stepper_is_incremental() {
    let s = models::cyclic_three_state::<f64>();
    let mut st = LawStepper::new(&s);
    st.advance_to(10).unwrap();
    st.advance_to(25).unwrap();
    assert_eq!(st.n(), 25);
    assert_eq!(st.law(), &exact_law(&s, 25).unwrap());
}

#[test]
fn local_limit_values() {
    let s = models::lazy_walk::<f64>();
    let rows = local_limit_scan(&s, &[400, 1600, 6400], &[0]).unwrap();
    let c = rows.iter().map(|r| r.sqrtn_prob).fold(0.0, f64::max);
    assert!(c < 0.6, "{rows:?}");
    let last = rows.last().unwrap();
    let limit = 1.0 / std::f64::consts::PI.sqrt();
    assert!((last.sqrtn_prob - limit).abs() < 0.1 * limit);
    assert!((last.gaussian_pred - limit).abs() < 1e-15);
}

#[test]
fn corner_probability_is_a_single_path() {
    let s = models::lazy_walk::<f64>();
    let rows = local_limit_scan(&s, &[20], &[20]).unwrap();
    let want = 20f64.sqrt() * 0.25f64.powi(20);
    assert!((rows[0].sqrtn_prob - want).abs() < 1e-15 * want);
}

#[test]
fn periodic_walk_has_parity_zeros() {
    let s = models::coin_walk::<f64>();
    let rows = local_limit_scan(&s, &[101, 1001], &[0, 2, -4]).unwrap();
    assert!(rows.iter().all(|r| r.sqrtn_prob == 0.0));
}

#[test]
fn local_limit_bound_does_not_grow() {
    for (name, s) in test_chains() {
        let ns = [100, 400, 1600, 6400];
        let mut st = LawStepper::new(&s);
        let maxima: Vec<f64> = ns.iter().map(|&n| st.advance_to(n).unwrap().max_scaled()).collect();
        let (slope, _, _) = log_log_fit(&ns.map(|n| n as f64), &maxima).unwrap();
        assert!(slope < 0.02, "{name}: {maxima:?}");
    }
}

#[test]
fn kernel_trivial_pairs() {
    let s = models::lazy_walk::<f64>();
    let same = potential_kernel(&s, 200, 3, 3).unwrap();
    assert!(same.partial_sums.iter().all(|&v| v == 0.0));
    let mirror = potential_kernel(&s, 200, 1, -1).unwrap();
    assert!(mirror.partial_sums.iter().all(|&v| v == 0.0));
}

#[test]
fn kernel_is_monotone_and_converges() {
    let s = models::lazy_walk::<f64>();
    let curves = potential_kernels(&s, 8192, &[(0, 1), (0, 2), (0, 3)]).unwrap();
    for c in &curves {
        assert!(c.partial_sums.windows(2).all(|w| w[1] >= w[0]));
        let (a, b) = (c.at(4096), c.at(8192));
        assert!((b - a) < 0.05 * a, "({}, {}): {a} → {b}", c.x, c.y);
        // Σ_{n≥0} (P(S_n=0) − P(S_n=x)) = |x|/σ² = 2|x| for the lazy walk;
        // without the n = 0 term the limit is 2|x| − 1. The tail beyond N
        // is about 2x²/√(πN).
        let d = (c.y - c.x) as f64;
        let tail = 2.0 * d * d / (std::f64::consts::PI * 8192.0).sqrt();
        assert!((b + tail - (2.0 * d - 1.0)).abs() < 0.2 * tail, "|x−y| = {d}: {b}");
    }
}

#[test]
fn kernel_matches_direct_laws() {
    let s = models::skewed_four_state::<f64>();
    let c = potential_kernel(&s, 30, 0, 2).unwrap();
    let direct: f64 = (1..=30)
        .map(|n| {
            let l = exact_law(&s, n).unwrap();
            (l.marginal(0) - l.marginal(2)).abs()
        })
        .sum();
    assert!((c.last() - direct).abs() < 1e-14);
}

#[test]
fn variance_extrapolation() {
    for (name, s) in test_chains() {
        let gk = loctime_core::asymptotic_variance(&s).unwrap();
        let ex = extrapolated_variance(&s).unwrap();
        assert!((gk - ex).abs() < 1e-4 * gk, "{name}: {gk} {ex}");
    }
}

#[test]
fn single_precision_law() {
    let s = models::cyclic_three_state::<f32>();
    let l = exact_law(&s, 200).unwrap();
    assert!((l.total_mass() - 1.0).abs() < 1e-4);
    let d = exact_law(&models::cyclic_three_state::<f64>(), 200).unwrap();
    for x in -200..=200 {
        assert!((l.marginal(x) as f64 - d.marginal(x)).abs() < 1e-5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dp_matches_inversion_on_random_chains(
        rows in prop::collection::vec(prop::collection::vec(0.05f64..1.0, 3), 3),
        n in 1usize..40,
    ) {
        // Sinkhorn-balance so π is uniform and φ = (−1, 0, 1) is centred.
        let mut rows = rows;
        for _ in 0..500 {
            for j in 0..3 {
                let c: f64 = rows.iter().map(|r| r[j]).sum();
                rows.iter_mut().for_each(|r| r[j] /= c);
            }
            for r in rows.iter_mut() {
                let t: f64 = r.iter().sum();
                r.iter_mut().for_each(|v| *v /= t);
            }
        }
        let s = build_chain(Matrix::from_rows(&rows).unwrap(), vec![-1, 0, 1]).unwrap();
        let law = exact_law(&s, n).unwrap();
        let inv = inversion_marginals(&s, n, inversion_points(&s, n));
        for (a, b) in law.marginals().iter().zip(&inv) {
            prop_assert!((a - b).abs() < 1e-8);
        }
        prop_assert!((law.total_mass() - 1.0).abs() < 1e-12);
    }
}
