use proptest::prelude::*;
use skdv_core::counterexamples::*;
use skdv_core::par::Parallelism;
use skdv_core::spectral::Regularity;

fn reg(k: f64, s: f64) -> Regularity {
    Regularity::new(k, s, 0.0)
}

fn run(family: Family, r: Regularity, rho: Option<f64>, ns: Vec<f64>) -> GrowthReport {
    GrowthExperiment::new(family, ns, r, 0.1, rho).unwrap().run().unwrap()
}

/// Measure of `{x in A, x1 in A1, x - x1 in A2}` from the piecewise linear inner length.
fn constraint_area(a: (f64, f64), a1: (f64, f64), a2: (f64, f64)) -> f64 {
    let len = |x: f64| (a1.1.min(x - a2.0) - a1.0.max(x - a2.1)).max(0.0);
    let mut cuts = vec![a.0, a.1, a1.0 + a2.0, a1.0 + a2.1, a1.1 + a2.0, a1.1 + a2.1];
    cuts.retain(|c| *c >= a.0 && *c <= a.1);
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (len(w[0]) + len(w[1]))).sum()
}

#[test]
fn dualized_form_with_unit_weight_is_the_constraint_volume() {
    let sup = DualSupports::high_low(16.0);
    let v = dualized_form(&sup, |_| 1.0, 1.0 / 128.0, Quadrature::default(), Parallelism::default());
    assert!((v - 0.25).abs() < 1e-13, "{v}");
}

#[test]
fn disjoint_supports_give_zero() {
    let mut sup = DualSupports::high_low(16.0);
    sup.h.xi = (30.0, 31.0);
    let r = reg(1.0, 0.0);
    assert_eq!(dualized_form(&sup, |p| cor41_weight(&r, p), 0.01, Quadrature::default(), Parallelism::default()), 0.0);
    let mut sup = DualSupports::high_low(16.0);
    sup.h.tau = (0.0, 1.0);
    assert_eq!(dualized_form(&sup, |p| cor42_weight(&r, p), 0.01, Quadrature::default(), Parallelism::default()), 0.0);
}

#[test]
fn modulations_on_the_supports_have_the_stated_sizes() {
    let n = 256.0;
    for &(th, a, sg, c) in &[(0.5, 0.3, 0.5, 0.5), (0.9, 0.9, 0.2, 0.7), (0.3, 0.1, 0.8, 0.2)] {
        let p = DualPoint { xi: n + th, tau: n * n + sg, xi1: th * a, tau1: sg * c };
        assert!(p.xi2() >= n && p.xi2() <= n + 1.0 && p.tau2() >= n * n && p.tau2() <= n * n + 1.0);
        let m1 = p.tau1 - p.xi1 * p.xi1;
        let m2 = p.tau2() + p.xi2().powi(3);
        let m = (p.tau - p.xi * p.xi).abs();
        assert!(m1.abs() <= 1.0);
        assert!(m2 >= n.powi(3) && m2 <= 2.0 * n.powi(3));
        assert!(m >= 0.1 * n && m <= 2.0 * n + 2.0, "{m}");
    }
}

#[test]
fn cor41_slope_matches_the_exponent() {
    let ns = dyadic(4, 10);
    let rep = run(Family::Cor41, reg(3.5, 0.0), None, ns.clone());
    let f = rep.fit.unwrap();
    assert!(f.within(0.1), "{f:?}");
    assert!(f.slope > 0.0);
    assert!(f.local_slope_drift(&ns, 64.0) < 0.02, "{f:?}");
}

#[test]
fn cor42_slope_matches_the_exponent() {
    let ns = dyadic(4, 10);
    let f = run(Family::Cor42, reg(0.0, 2.0), None, ns.clone()).fit.unwrap();
    assert!(f.within(0.1), "{f:?}");
    assert!(f.local_slope_drift(&ns, 64.0) < 0.02, "{f:?}");
}

#[test]
fn cor42_at_the_boundary_does_not_diverge() {
    let f = run(Family::Cor42, reg(0.0, 1.0), None, dyadic(4, 10)).fit.unwrap();
    assert!((f.predicted - 0.02).abs() < 1e-12);
    assert!(f.within(0.1), "{f:?}");
    assert!(f.slope < 0.1);
}

#[test]
fn doubling_the_quadrature_changes_values_by_under_one_percent() {
    let q = Quadrature::default();
    let par = Parallelism::default();
    let r = reg(3.5, 0.0);
    for n in [16.0, 128.0] {
        for f in [cor41_value, cor42_value] {
            let (a, b) = (f(n, &r, q, par), f(n, &r, q.doubled(), par));
            assert!(((a - b) / b).abs() < 0.01, "{n}: {a} {b}");
        }
    }
    for n in dyadic(3, 9) {
        let (a, b) = (sec6_u_iterate(n, &r, 0.1, q, par), sec6_u_iterate(n, &r, 0.1, q.doubled(), par));
        assert!(((a - b) / b).abs() < 0.01);
    }
    let r = reg(0.0, 4.5);
    for n in dyadic(4, 12) {
        let (a, b) = (sec6_v_iterate(n, &r, 2.0, 0.1, q, par), sec6_v_iterate(n, &r, 2.0, 0.1, q.doubled(), par));
        assert!(((a - b) / b).abs() < 0.01);
    }
}

#[test]
fn sec6_u_slope_is_k_minus_three() {
    for k in [3.5, 4.5] {
        let f = run(Family::Sec6U, reg(k, 0.0), None, dyadic(3, 9)).fit.unwrap();
        assert!((f.predicted - (k - 3.0)).abs() < 1e-12);
        assert!(f.within(0.15), "{f:?}");
    }
}

#[test]
fn sec6_u_vanishes_at_time_zero() {
    assert_eq!(sec6_u_iterate(64.0, &reg(3.5, 0.0), 0.0, Quadrature::default(), Parallelism::default()), 0.0);
}

#[test]
fn sec6_u_ratio_to_data_norm_separates_the_regimes() {
    let ns = dyadic(3, 9);
    let ratio = |k: f64, s: f64| -> Vec<f64> {
        let rep = run(Family::Sec6U, reg(k, s), None, ns.clone());
        rep.values.iter().zip(&ns).map(|(v, n)| v / n.powf(s)).collect()
    };
    // k - s = 4: grows without bound
    let r = ratio(4.0, 0.0);
    assert!(r.windows(2).all(|w| w[1] > 1.5 * w[0]), "{r:?}");
    // k - s <= 3: bounded by its early values
    for (k, s) in [(3.0, 0.0), (2.0, 0.0), (3.5, 1.0)] {
        let r = ratio(k, s);
        let early = r[..3].iter().cloned().fold(0.0, f64::max);
        assert!(r.iter().all(|x| *x <= 1.05 * early), "({k},{s}): {r:?}");
    }
}

#[test]
fn sec6_v_slope_matches_the_exponent() {
    let f = run(Family::Sec6V, reg(0.0, 4.5), Some(2.0), dyadic(4, 12)).fit.unwrap();
    assert!((f.predicted - 1.0).abs() < 1e-12);
    assert!(f.within(0.15), "{f:?}");
}

#[test]
fn self_interaction_vanishes_after_projection() {
    let r = reg(0.0, 4.5);
    let (q, par) = (Quadrature::default(), Parallelism::default());
    for n in dyadic(4, 12) {
        assert_eq!(sec6_v_self_term(n, &r, 0.1, q, par), 0.0);
    }
    assert!(v_self_interaction_norm((0.0, 2.0), &r, 0.1, q, par) > 0.1);
}

#[test]
fn rho_outside_the_window_is_rejected() {
    let r = reg(0.0, 4.5);
    assert_eq!(rho_window(&r), (1.0, 3.0));
    for rho in [0.9, 1.0, 3.0, 3.5] {
        let e = GrowthExperiment::new(Family::Sec6V, dyadic(4, 8), r, 0.1, Some(rho));
        assert!(matches!(e, Err(CounterexampleError::RhoOutsideWindow { .. })), "{rho}");
    }
    assert!(matches!(
        GrowthExperiment::new(Family::Sec6V, dyadic(4, 8), r, 0.1, None),
        Err(CounterexampleError::MissingRho)
    ));
    // k + 1/2 dominates for k > 1/2
    assert_eq!(rho_window(&reg(1.0, 4.5)).0, 1.5);
}

#[test]
fn invalid_experiments_are_rejected() {
    let r = reg(3.5, 0.0);
    let bad = |f: Family, ns: Vec<f64>, c: f64| GrowthExperiment::new(f, ns, r, c, None).unwrap_err();
    assert!(matches!(bad(Family::Cor41, dyadic(4, 5), 0.1), CounterexampleError::TooFewPoints { .. }));
    assert!(matches!(bad(Family::Cor41, vec![16.0, 8.0, 32.0], 0.1), CounterexampleError::BadNValues));
    assert!(matches!(bad(Family::Sec6U, dyadic(2, 6), 0.1), CounterexampleError::NTooSmall { .. }));
    assert!(matches!(bad(Family::Sec6U, dyadic(3, 6), 0.0), CounterexampleError::BadCTime(_)));
    assert!(matches!(bad(Family::Sec6U, dyadic(3, 6), 1.0), CounterexampleError::BadCTime(_)));
    let mut r2 = r;
    r2.b = 0.4;
    assert!(matches!(
        GrowthExperiment::new(Family::Cor41, dyadic(4, 6), r2, 0.1, None),
        Err(CounterexampleError::Regularity(_))
    ));
}

#[test]
fn family_names_parse() {
    for f in Family::ALL {
        assert_eq!(f.name().parse::<Family>().unwrap(), f);
        assert_eq!(serde_json::to_string(&f).unwrap(), format!("\"{}\"", f.name()));
    }
    assert_eq!("sec6_region1".parse::<Family>().unwrap(), Family::Sec6U);
    assert_eq!(serde_json::from_str::<Family>("\"sec6_region2\"").unwrap(), Family::Sec6V);
    assert!("cor43".parse::<Family>().is_err());
}

#[test]
fn csv_is_deterministic_across_modes() {
    let mut e = GrowthExperiment::new(Family::Cor41, dyadic(4, 7), reg(3.5, 0.0), 0.1, None).unwrap();
    let a = e.run().unwrap().to_csv();
    let b = e.run().unwrap().to_csv();
    e.parallelism = Parallelism::SEQUENTIAL;
    let c = e.run().unwrap().to_csv();
    assert_eq!(a, b);
    assert_eq!(a, c);
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 9);
    assert_eq!(row[0], "cor41");
    assert_eq!(row[1], "1.6000000000000000e1");
    assert!(row[6].is_empty() && row[7].is_empty());
}

#[test]
fn c_time_sweep_leaves_the_slope_unchanged() {
    let e = GrowthExperiment::new(Family::Sec6U, dyadic(3, 9), reg(3.5, 0.0), 0.1, None).unwrap();
    let reps = e.c_time_sweep().unwrap();
    assert_eq!(reps.len(), 3);
    let slopes: Vec<f64> = reps.iter().map(|r| r.fit.as_ref().unwrap().slope).collect();
    assert!(slopes.iter().all(|s| (s - slopes[0]).abs() < 0.01), "{slopes:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn unit_weight_integrates_to_the_exact_volume(
        a0 in -5.0f64..5.0, al in 0.1f64..4.0,
        b0 in -5.0f64..5.0, bl in 0.1f64..4.0,
        c0 in -5.0f64..5.0, cl in 0.1f64..4.0,
    ) {
        let h = FreqBox { xi: (a0, a0 + al), tau: (b0, b0 + bl) };
        let h1 = FreqBox { xi: (b0, b0 + bl), tau: (c0, c0 + cl) };
        let h2 = FreqBox { xi: (c0, c0 + cl), tau: (a0, a0 + al) };
        let sup = DualSupports { h1, h2, h };
        let exact = constraint_area(h.xi, h1.xi, h2.xi) * constraint_area(h.tau, h1.tau, h2.tau);
        let v = dualized_form(&sup, |_| 1.0, 0.05, Quadrature { order: 4 }, Parallelism::SEQUENTIAL);
        prop_assert!((v - exact).abs() < 1e-11 * (1.0 + exact));
    }

    #[test]
    fn iterates_are_nonnegative_and_grow_with_time(n in 8.0f64..200.0, c in 0.01f64..0.3) {
        let r = reg(3.5, 0.0);
        let (q, par) = (Quadrature::default(), Parallelism::SEQUENTIAL);
        let a = sec6_u_iterate(n, &r, c, q, par);
        let b = sec6_u_iterate(n, &r, 2.0 * c, q, par);
        prop_assert!(a > 0.0 && b > a);
    }
}
