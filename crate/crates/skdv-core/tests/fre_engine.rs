use std::sync::Arc;

use proptest::prelude::*;
use skdv_core::fre::*;
use skdv_core::par::Parallelism;
use skdv_core::resonance::{PhaseId, RegionParams};
use skdv_core::spectral::Regularity;

fn flat() -> WeightFn {
    Arc::new(|_: &[f64], _: &Regularity| 1.0)
}

/// `Phi = c xi1` on `[xi, xi1, xi2]` with unit weight: the window set for fixed `xi` is an interval of length `2M/|c|`.
fn linear_query(c: f64, alpha: f64, m: f64) -> FreQuery {
    let spec = EstimateSpec::custom("linear", vec!["xi", "xi1", "xi2"], SeparablePhase::linear(3, 1, c), flat(), None, vec![0]).unwrap();
    let mut q = FreQuery::new(spec, Regularity::new(0.0, 0.0, 0.0)).at(alpha, m);
    q.xi_weight_eta = Some(0.0);
    q
}

#[test]
fn linear_phase_measures_the_window() {
    for (c, alpha, m) in [(3.0, 100.0, 5.0), (-2.0, 50.0, 1.0), (0.5, -40.0, 8.0)] {
        let r = evaluate_fre(&linear_query(c, alpha, m)).unwrap();
        let want = 2.0 * m / c.abs();
        assert!((r.value - want).abs() < 0.02 * want, "c={c}: {} vs {want}", r.value);
        assert!((r.set_measure - want).abs() < 0.02 * want);
        assert!(!r.flagged());
    }
}

#[test]
fn window_beyond_the_phase_range_is_empty() {
    // |Phi| <= cutoff = 1e7 on the lattice, far below alpha
    let mut q = linear_query(1.0, 1e12, 1.0);
    q.lattice.cutoff = 1e7;
    let r = evaluate_fre(&q).unwrap();
    assert_eq!(r.value, 0.0);
    assert_eq!(r.set_measure, 0.0);
}

#[test]
fn linear_sweep_recovers_unit_m_and_flat_alpha() {
    let mut q = linear_query(1.0, 0.0, 1.0);
    q.lattice.cutoff = 1e5;
    let alphas: Vec<f64> = (6..=11).map(|j| 2f64.powi(j)).collect();
    let ms: Vec<f64> = (0..=5).map(|j| 2f64.powi(j)).collect();
    let fit = sweep_and_fit(&q, &alphas, &ms).unwrap();
    assert!((fit.exponent_m - 1.0).abs() < 0.02, "{fit:?}");
    assert!(fit.exponent_alpha.abs() < 0.02, "{fit:?}");
    assert_eq!(fit.excluded, 0);
}

#[test]
fn sweep_needs_six_values_per_axis() {
    let q = linear_query(1.0, 0.0, 1.0);
    let e = sweep_and_fit(&q, &[64.0, 128.0, 256.0], &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0]).unwrap_err();
    assert_eq!(e, FreError::TooFewPoints { needed: 6, got: 3 });
}

#[test]
fn sweep_refuses_when_most_points_are_singular() {
    // 1/xi1^2 is not integrable across xi1 = 0, which every window contains when alpha is small
    let spec = EstimateSpec::custom(
        "singular",
        vec!["xi", "xi1", "xi2"],
        SeparablePhase::linear(3, 2, 1.0),
        Arc::new(|x: &[f64], _: &Regularity| 1.0 / (x[1] * x[1])),
        None,
        vec![0],
    )
    .unwrap();
    let mut q = FreQuery::new(spec, Regularity::new(0.0, 0.0, 0.0));
    q.lattice.cutoff = 1e5;
    let alphas: Vec<f64> = (6..=11).map(|j| 2f64.powi(j)).collect();
    let ms: Vec<f64> = (0..=5).map(|j| 2f64.powi(j)).collect();
    match sweep_and_fit(&q, &alphas, &ms) {
        Err(FreError::FitRefused { excluded, total }) => assert!(excluded * 10 > total * 3),
        other => panic!("expected a refused fit, got {other:?}"),
    }
}

#[test]
fn invalid_queries_are_rejected() {
    let q = linear_query(1.0, 10.0, 0.0);
    assert!(matches!(evaluate_fre(&q), Err(FreError::Invalid(_))));
    let q = linear_query(1.0, 10.0, -1.0);
    assert!(matches!(evaluate_fre(&q), Err(FreError::Invalid(_))));
    // cutoff below 10 sqrt(alpha)
    let mut q = linear_query(1.0, 1e8, 1.0);
    q.lattice.cutoff = 1e4;
    assert!(matches!(evaluate_fre(&q), Err(FreError::Invalid(_))));
    let mut q = linear_query(1.0, 10.0, 1.0);
    q.fixed = Some(vec![0, 1]);
    assert!(matches!(evaluate_fre(&q), Err(FreError::Invalid(_))));
}

#[test]
fn unknown_id_is_an_error() {
    assert_eq!(catalog_lookup("lem:nope").unwrap_err(), FreError::UnknownId("lem:nope".into()));
    assert!(FreQuery::catalog("thm:1", Regularity::new(1.0, 0.0, 0.0)).is_err());
}

#[test]
fn catalog_multiplier_example() {
    let spec = catalog_lookup("lem:probU").unwrap();
    let r = Regularity::new(1.0, 0.0, 0.0);
    let x = [40.0, 0.1, 39.9];
    // <40>^2 / <0.1>^2 = 1601 / 1.01
    let w = spec.weight(&x, &r);
    assert!((w - 1601.0 / 1.01).abs() < 1e-9 * w, "{w}");
    assert!(((spec.multiplier)(&x, &r) - w.sqrt()).abs() < 1e-12 * w);
}

#[test]
fn every_catalog_entry_resolves_and_is_consistent() {
    let all = catalog();
    assert_eq!(all.len(), CATALOG_IDS.len());
    for spec in &all {
        assert_eq!(spec.phase.coeffs.len(), spec.variables.len(), "{}", spec.id);
        for f in spec.fixed_options() {
            assert!(!f.is_empty() && f.len() < spec.variables.len() - 1, "{}", spec.id);
            assert!(f.iter().all(|&j| j < spec.variables.len()));
        }
        if let Criterion::TwoSided(splits) = &spec.criterion {
            let q = FreQuery::new(spec.clone(), Regularity::new(1.0, 0.5, 0.1));
            for s in splits {
                check_weight_product(&q, &(s.first.clone(), s.second.clone()))
                    .unwrap_or_else(|e| panic!("{} split {}: {e}", spec.id, s.name));
            }
        }
    }
}

#[test]
fn admissible_region_is_rebuilt_from_the_regimes() {
    let rec = reconstruct_admissible(-4.0, 8.0);
    assert!(rec.inside);
    assert!(rec.admissible_area > 1.0);
    assert!((rec.union_area - rec.admissible_area).abs() < 1e-9 * rec.admissible_area, "{rec:?}");
    assert_eq!(rec.regimes.len(), 3);
}

#[test]
fn two_sided_symmetric_split_gives_equal_sides() {
    let phase = SeparablePhase { coeffs: vec![[0.0; 3], [0.0, 1.0, 0.0], [0.0, 1.0, 0.0]] };
    let weight: WeightFn = Arc::new(|x: &[f64], _: &Regularity| 1.0 / (jp(x[1]) * jp(x[2])));
    let spec = EstimateSpec::custom("sym", vec!["xi", "xi1", "xi2"], phase, weight, None, vec![1]).unwrap();
    let q = FreQuery::new(spec, Regularity::new(0.0, 0.0, 0.0)).at(300.0, 4.0);
    let half: WeightFn = Arc::new(|x: &[f64], _: &Regularity| 1.0 / (jp(x[1]) * jp(x[2])).sqrt());
    let (a, b) = two_sided_fre(&q, &[1], &[2], (half.clone(), half)).unwrap();
    assert!(a.value > 0.0);
    assert!((a.value - b.value).abs() < 1e-6 * a.value, "{} vs {}", a.value, b.value);
}

#[test]
fn two_sided_rejects_mismatched_weights() {
    let spec = catalog_lookup("lem:3").unwrap();
    let Criterion::TwoSided(splits) = spec.criterion.clone() else { panic!("lem:3 is two-sided") };
    let q = FreQuery::new(spec, Regularity::new(2.5, 0.0, 0.1)).at(1e4, 16.0);
    let s = &splits[0];
    let first = s.first.clone();
    let off: WeightFn = Arc::new(move |x: &[f64], r: &Regularity| 1.01 * first(x, r));
    match two_sided_fre(&q, &s.fixed, &complement(4, &s.fixed), (off, s.second.clone())) {
        Err(FreError::WeightMismatch { relative }) => assert!((relative - 0.01).abs() < 1e-6),
        other => panic!("expected a weight mismatch, got {other:?}"),
    }
}

#[test]
fn relabelling_inputs_leaves_the_value_unchanged() {
    let spec = catalog_lookup("lem:probU").unwrap();
    let r = Regularity::new(1.0, 0.0, 0.3);
    let mut q = FreQuery::new(spec.clone(), r).at(2e4, 32.0);
    q.fixed = Some(vec![2]);
    q.check_refinement = false;
    let direct = evaluate_fre(&q).unwrap();

    let base = SeparablePhase::from_id(PhaseId::PhiU1);
    let swapped = SeparablePhase { coeffs: vec![base.coeffs[0], base.coeffs[2], base.coeffs[1]] };
    let s2 = spec.clone();
    let weight: WeightFn = Arc::new(move |x: &[f64], r: &Regularity| s2.weight(&[x[0], x[2], x[1]], r));
    let region: RegionFn = Arc::new(|p: &RegionParams| Region {
        all: skdv_core::fre::catalog::u_clauses(&vec![1.0, 0.0, 0.0], &vec![0.0, 0.0, 1.0], p),
        none_of: vec![],
    });
    let mut relabelled = spec;
    relabelled.phase = swapped;
    relabelled.region = region;
    relabelled.multiplier = Arc::new(move |x: &[f64], r: &Regularity| weight(x, r).sqrt());
    let mut q2 = FreQuery::new(relabelled, r).at(2e4, 32.0);
    q2.fixed = Some(vec![1]);
    q2.check_refinement = false;
    let moved = evaluate_fre(&q2).unwrap();
    assert!(direct.value > 0.0);
    assert!((direct.value - moved.value).abs() < 1e-9 * direct.value, "{} vs {}", direct.value, moved.value);
}

#[test]
fn prob_u_large_modulation_is_finite_and_resolved() {
    let mut q = FreQuery::catalog("lem:probU", Regularity::new(2.5, 1.0, 0.3)).unwrap().at(1e6, 1e3);
    q.lattice.cutoff = 16384.0;
    let r = evaluate_fre(&q).unwrap();
    assert!(r.value.is_finite() && r.value > 0.0);
    let coarse = r.coarse_value.unwrap();
    assert!((r.value - coarse).abs() < 0.05 * r.value, "{} vs {coarse}", r.value);
    assert!(!r.under_resolved && !r.singular);
}

#[test]
fn boundary_v_sup_hits_the_resonant_singularity() {
    // Phi vanishes inside V for moderate |xi|, so 1/Phi^2 is not integrable there
    let mut q = FreQuery::catalog("lem:bdryHs-v", Regularity::new(0.0, 1.0, 0.1)).unwrap();
    q.lattice.cutoff = 2048.0;
    q.check_refinement = false;
    assert!(evaluate_fre(&q).unwrap().singular);
}

#[test]
fn boundary_u_sup_is_finite() {
    let mut q = FreQuery::catalog("lem:bdryHs-u", Regularity::new(2.5, 0.0, 0.3)).unwrap();
    q.lattice.cutoff = 2048.0;
    let r = evaluate_fre(&q).unwrap();
    assert!(r.value.is_finite() && r.value > 0.0 && !r.singular, "{r:?}");
}

#[test]
fn evaluation_is_deterministic_across_modes() {
    let mut q = FreQuery::catalog("lem:1", Regularity::new(1.0, 0.0, 0.3)).unwrap().at(4096.0, 16.0);
    q.lattice.cutoff = 8192.0;
    let a = evaluate_fre(&q).unwrap();
    let b = evaluate_fre(&q).unwrap();
    q.parallelism = Parallelism::SEQUENTIAL;
    let c = evaluate_fre(&q).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.value.to_bits(), c.value.to_bits());
    assert_eq!(a.argmax_freq, c.argmax_freq);
}

#[test]
fn out_of_range_prob_u_diverges_in_range_does_not() {
    let q = FreQuery::catalog("lem:probU", Regularity::new(2.5, 0.0, 0.0)).unwrap();
    let d = divergence_check(&q, &[1024.0, 2048.0, 4096.0], 16.0).unwrap();
    assert!(d.diverging, "{d:?}");
    let q = FreQuery::catalog("lem:probU", Regularity::new(1.0, 0.5, 0.0)).unwrap();
    let d = divergence_check(&q, &[1024.0, 2048.0, 4096.0], 16.0).unwrap();
    assert!(!d.diverging, "{d:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn value_grows_with_the_window(log_alpha in 10.0f64..14.0, log_m in 2.0f64..6.0, k in 0.0f64..2.0) {
        let alpha = 2f64.powf(log_alpha);
        let m = 2f64.powf(log_m);
        let mut q = FreQuery::catalog("lem:1", Regularity::new(k, 0.0, 0.1)).unwrap().at(alpha, m);
        q.lattice.cutoff = 8192.0;
        q.check_refinement = false;
        let small = evaluate_fre(&q).unwrap().value;
        let big = evaluate_fre(&q.clone().at(alpha, 2.0 * m)).unwrap().value;
        prop_assert!(big >= small * (1.0 - 1e-9), "{} < {}", big, small);
    }

    #[test]
    fn linear_window_is_exact(c in 0.25f64..4.0, alpha in -200.0f64..200.0, m in 0.5f64..10.0) {
        let r = evaluate_fre(&linear_query(c, alpha, m)).unwrap();
        let want = 2.0 * m / c;
        prop_assert!((r.value - want).abs() < 1e-6 * want, "{} vs {}", r.value, want);
    }
}
