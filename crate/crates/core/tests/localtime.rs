use loctime_core::localtime::{
    local_time_field, modulus, moment_rhs, moment_statistics, moment_statistics_multi, occupation, occupation_of_field,
    plain_modulus, riemann_occupation, simulate_fields, sparse_modulus, FieldBuilder, LocalTimeField, MomentError,
};
use loctime_core::{asymptotic_variance, models, sample_paths};
use proptest::prelude::*;

fn walk_increments() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-2i64..=2, 1..64)
}

#[test]
fn field_examples() {
    let f = local_time_field(&[1]);
    assert_eq!((f.count(0), f.count(1), f.total()), (1, 1, 2));
    let f = local_time_field(&[0, 0, 0, 0]);
    assert_eq!(f.l(0.0), 2.5);
    assert_eq!(f.l(0.49), 2.5);
    assert_eq!(f.l(-0.01), 0.0);
    let f = local_time_field(&[2, -1, -1, -1]);
    assert_eq!((f.min_level(), f.max_level(), f.end()), (-1, 2, -1));
    assert_eq!(f.counts(), &[1, 2, 1, 1]);
}

#[test]
fn simulated_fields_conserve_mass() {
    for s in [models::lazy_walk::<f64>(), models::skewed_four_state(), models::cyclic_three_state()] {
        for n in [1, 2, 17, 1000] {
            let ok = simulate_fields(&s, n, 200, 5, |_, f| f.total() == n as u64 + 1 && f.n() == n);
            assert!(ok.into_iter().all(|b| b));
        }
    }
}

#[test]
fn simulated_fields_match_sampled_paths() {
    let s = models::skewed_four_state::<f64>();
    let batch = sample_paths(&s, 300, 40, 11);
    let fields = simulate_fields(&s, 300, 40, 11, |_, f| f.clone());
    for (path, f) in batch.iter().zip(&fields) {
        assert_eq!(&local_time_field(path), f);
    }
}

#[test]
fn simulation_ignores_thread_count() {
    let s = models::correlated_three_state::<f64>(0.4);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| simulate_fields(&s, 500, 300, 2, |_, f| f.counts().to_vec()))
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn occupation_edge_cases() {
    let inc = [1, 1, -1, 0, 0, -1, -1, -1, 1];
    let n = inc.len();
    let r = (n as f64).sqrt();
    let all = occupation(&inc, -10.0, 10.0);
    assert_eq!(all.visits, n as u64);
    assert!((all.nu - 1.0).abs() < 1e-15);
    let empty = occupation(&inc, 5.0, 6.0);
    assert_eq!((empty.visits, empty.integral), (0, 0.0));
    // Whole lattice cells: the integral counts k = 0..n, the occupation
    // time k = 0..n−1, so they differ by exactly the endpoint term.
    let cells = occupation(&inc, -2.0 / r, 3.0 / r);
    let end_inside = (-2..3).contains(&inc.iter().sum::<i64>()) as u64;
    assert_eq!(cells.visits + end_inside, local_time_field(&inc).total());
}

#[test]
fn occupation_error_is_small_for_long_walks() {
    let s = models::lazy_walk::<f64>();
    let n = 10_000;
    for (a, b) in [(-0.5, 0.5), (-1.3, 0.07), (0.21, 1.9)] {
        let d = simulate_fields(&s, n, 2000, 3, |_, f| occupation_of_field(f, a, b).difference());
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        assert!(mean < 0.05, "[{a}, {b}): {mean}");
    }
}

#[test]
fn local_time_sup_is_tight() {
    let s = models::lazy_walk::<f64>();
    let sigma = asymptotic_variance(&s).unwrap().sqrt();
    let sups = simulate_fields(&s, 10_000, 4000, 8, |_, f| f.sup_on(-2.0, 2.0));
    let above = |a: f64| sups.iter().filter(|&&v| v > a).count() as f64 / sups.len() as f64;
    let levels = [1.0, 2.0, 4.0, 6.0].map(|k| k / sigma);
    let probs = levels.map(above);
    assert!(probs.windows(2).all(|w| w[1] <= w[0]), "{probs:?}");
    assert!(probs[3] < 0.01, "{probs:?}");
    assert!(probs[0] > 0.1, "{probs:?}");
}

/// ω' by brute force over real cut positions restricted to a grid of step
/// 1/16 (lattice units) plus the window ends, with a direct scan of the
/// cells each interval meets.
fn grid_sparse_modulus(f: &LocalTimeField, h: f64, delta: f64) -> f64 {
    let r = f.sqrt_n();
    let (lo, hi, d) = (-h * r, h * r, delta * r);
    let mut pts = vec![lo];
    let mut k = (lo * 16.0).floor() as i64 + 1;
    while (k as f64) / 16.0 < hi {
        pts.push(k as f64 / 16.0);
        k += 1;
    }
    pts.push(hi);
    let range = |p: f64, q: f64| {
        let (a, b) = (p.floor() as i64, q.ceil() as i64 - 1);
        let v: Vec<u32> = (a..=b).map(|j| f.count(j)).collect();
        v.iter().max().unwrap() - v.iter().min().unwrap()
    };
    let mut best = vec![u32::MAX; pts.len()];
    best[0] = 0;
    for q in 1..pts.len() {
        for p in 0..q {
            if best[p] != u32::MAX && pts[q] - pts[p] > d {
                best[q] = best[q].min(best[p].max(range(pts[p], pts[q])));
            }
        }
    }
    best[pts.len() - 1] as f64 / r
}

/// ω by brute force over pairs of grid points in `[−h, h]`.
fn grid_plain_modulus(f: &LocalTimeField, h: f64, eta: f64) -> f64 {
    let r = f.sqrt_n();
    let (lo, hi) = (-h * r, h * r);
    let mut pts: Vec<f64> = ((lo * 16.0).ceil() as i64..=(hi * 16.0).floor() as i64).map(|k| k as f64 / 16.0).collect();
    pts.push(hi);
    let mut best = 0;
    for &s in &pts {
        for &t in &pts {
            if (s - t).abs() < eta * r {
                best = best.max(f.count(s.floor() as i64).abs_diff(f.count(t.floor() as i64)));
            }
        }
    }
    best as f64 / r
}

#[test]
fn modulus_over_a_single_jump() {
    // 100 steps at level 0 followed by a jump: l_n = 10 on [0, 0.1) only.
    let mut inc = vec![0i64; 99];
    inc.push(5);
    let f = local_time_field(&inc);
    let m = modulus(&f, 1.0, 0.2);
    assert!((m.omega - 10.0).abs() < 1e-12, "{m:?}");
    // The spike is narrower than δ, so some interval must contain it.
    assert!((m.omega_prime - 10.0).abs() < 1e-12, "{m:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn builder_agrees_with_direct(inc in walk_increments()) {
        let mut b = FieldBuilder::new(inc.len(), -2, 2);
        let f = b.build(inc.iter().copied());
        prop_assert_eq!(f.total(), inc.len() as u64 + 1);
        prop_assert_eq!(f, local_time_field(&inc));
    }

    #[test]
    fn field_is_constant_on_cells(inc in walk_increments(), x in -3.0f64..3.0) {
        let f = local_time_field(&inc);
        let r = f.sqrt_n();
        let mid = (f.cell(x) as f64 + 0.5) / r;
        prop_assert_eq!(f.l(x), f.l(mid));
        prop_assert_eq!(f.l(x), f.count((x * r).floor() as i64) as f64 / r);
    }

    #[test]
    fn occupation_bound_holds_pathwise(inc in walk_increments(), a in -3.0f64..3.0, w in 0.01f64..4.0) {
        let b = a + w;
        let o = occupation(&inc, a, b);
        prop_assert!(o.holds(inc.len()), "{o:?}");
        prop_assert_eq!(o.visits, riemann_occupation(&inc, a, b));
        prop_assert!((o.nu - o.visits as f64 / inc.len() as f64).abs() < 1e-15);
    }

    #[test]
    fn sparse_modulus_matches_grid_search(
        inc in prop::collection::vec(-2i64..=2, 4..40),
        h in 0.5f64..1.2,
        delta in 0.05f64..0.49,
    ) {
        let f = local_time_field(&inc);
        let exact = sparse_modulus(&f, h, delta);
        let coarse = grid_sparse_modulus(&f, h, delta);
        let relaxed = grid_sparse_modulus(&f, h, delta - 0.125 / f.sqrt_n());
        prop_assert!(relaxed <= exact && exact <= coarse, "{relaxed} {exact} {coarse}");
    }

    #[test]
    fn plain_modulus_matches_grid_search(
        inc in prop::collection::vec(-2i64..=2, 4..40),
        h in 0.5f64..1.2,
        eta in 0.05f64..1.0,
    ) {
        let f = local_time_field(&inc);
        let exact = plain_modulus(&f, h, eta);
        prop_assert!(grid_plain_modulus(&f, h, eta) <= exact);
        prop_assert!(exact <= grid_plain_modulus(&f, h, eta + 0.125 / f.sqrt_n()));
    }

    #[test]
    fn sparse_modulus_is_dominated(inc in walk_increments(), h in 0.5f64..3.0, delta in 0.001f64..0.499) {
        let f = local_time_field(&inc);
        let m = modulus(&f, h, delta);
        prop_assert!(m.omega_prime <= m.omega, "{m:?}");
    }

    #[test]
    fn moduli_are_monotone(inc in walk_increments(), d1 in 0.001f64..0.499, d2 in 0.001f64..0.499) {
        let f = local_time_field(&inc);
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(sparse_modulus(&f, 2.0, lo) <= sparse_modulus(&f, 2.0, hi));
        prop_assert!(plain_modulus(&f, 2.0, lo) <= plain_modulus(&f, 2.0, hi));
    }
}

#[test]
fn sparse_modulus_tail_shrinks_with_delta() {
    let s = models::lazy_walk::<f64>();
    let deltas = [0.2, 0.1, 0.05, 0.025];
    let rows = simulate_fields(&s, 10_000, 1000, 21, |_, f| deltas.map(|d| modulus(f, 2.0, d)));
    for m in rows.iter().flatten() {
        assert!(m.omega_prime <= m.omega, "{m:?}");
    }
    let tail: Vec<f64> = (0..deltas.len())
        .map(|i| rows.iter().filter(|r| r[i].omega_prime >= 0.5).count() as f64 / rows.len() as f64)
        .collect();
    assert!(tail.windows(2).all(|w| w[1] <= w[0]), "{tail:?}");
}

#[test]
fn moment_errors() {
    let s = models::lazy_walk::<f64>();
    assert_eq!(moment_statistics(&s, 100, 3, 3, 20_000, 1).unwrap_err(), MomentError::SameLevel(3));
    assert_eq!(moment_statistics(&s, 100, 0, 1, 9_999, 1).unwrap_err(), MomentError::TooFewSamples(9_999));
}

#[test]
fn moment_rhs_value() {
    let n = 10_000usize;
    let ln = (n as f64).ln();
    let want = 100f64.powi(3) * 8.0 + 1e8 * 2.0 * ln + 1e8 * ln * ln;
    assert!((moment_rhs(n, 2) - want).abs() < 1e-9 * want);
}

#[test]
fn moments_are_deterministic_and_consistent() {
    let s = models::cyclic_three_state::<f64>();
    let a = moment_statistics_multi(&s, 400, &[(0, 1), (0, 5)], &[0.25, 0.5], 10_000, 4).unwrap();
    let b = moment_statistics_multi(&s, 400, &[(0, 1), (0, 5)], &[0.25, 0.5], 10_000, 4).unwrap();
    assert_eq!(a, b);
    let single = moment_statistics(&s, 400, 0, 5, 10_000, 4).unwrap();
    assert_eq!(single.m6, a[1].m6);
    for r in &a {
        assert!(r.m6 > 0.0 && r.m6_stderr < r.m6);
        assert!(r.tails[0].prob >= r.tails[1].prob);
        assert!((r.ratio - r.m6 / r.rhs).abs() < 1e-15 * r.ratio.max(1.0));
    }
    // Farther levels decorrelate, so the difference has more spread.
    assert!(a[1].m6 > a[0].m6);
}
