use proptest::prelude::*;
use skdv_core::evolution::*;
use skdv_core::fit::least_squares;
use skdv_core::spectral::*;
use skdv_core::Complex64;

fn sech2(x: f64) -> f64 {
    1.0 / x.cosh().powi(2)
}

fn smooth_data(g: Grid, shift: f64) -> SpectralState {
    let xs = g.xs();
    let u: Vec<Complex64> = xs
        .iter()
        .map(|&x| Complex64::new((-x * x).exp(), 0.0) + Complex64::from_polar(0.4 * (-(x - shift).powi(2)).exp(), 1.5 * x))
        .collect();
    let v: Vec<Complex64> = xs.iter().map(|&x| Complex64::new(sech2(x + shift) - 0.3 * (-(x - 1.0).powi(2)).exp(), 0.0)).collect();
    SpectralState::new(
        0.0,
        to_spectral(&u, g, FieldKind::ULike).unwrap().dealias(),
        to_spectral(&v, g, FieldKind::VLike).unwrap().dealias(),
    )
    .unwrap()
}

fn random_state(n: usize, l: f64, seed: u64) -> SpectralState {
    let g = Grid::new(n, l).unwrap();
    let u = random_sobolev_data(g, 1.0, 0.01, seed, FieldKind::ULike).dealias();
    let v = random_sobolev_data(g, 1.0, 0.01, seed.wrapping_add(7), FieldKind::VLike).dealias();
    SpectralState::new(0.0, u, v).unwrap()
}

#[test]
fn zero_data_zero_functionals() {
    let g = Grid::new(64, 10.0).unwrap();
    let s = SpectralState::new(0.0, SpectralField::zeros(g, FieldKind::ULike), SpectralField::zeros(g, FieldKind::VLike)).unwrap();
    let cfg = EvolveConfig { dt: 0.1, t_end: 0.5, ..Default::default() };
    let p = CouplingParams::default();
    let rep = conservation_report(&evolve(&s, &cfg, &p).unwrap(), &p);
    assert!(rep.mass.iter().chain(&rep.momentum).chain(&rep.energy).all(|&x| x == 0.0));
    assert_eq!((rep.max_drift_mass, rep.max_drift_momentum, rep.max_drift_energy), (0.0, 0.0, 0.0));
}

#[test]
fn mass_drift_below_1e9() {
    let g = Grid::new(1024, 64.0).unwrap();
    let s0 = smooth_data(g, 2.0);
    let p = CouplingParams::new(1.0, 1.0, 1.0);
    let cfg = EvolveConfig { dt: 1e-4, t_end: 1.0, record_stride: 500, ..Default::default() };
    let rec = evolve(&s0, &cfg, &p).unwrap();
    let rep = conservation_report(&rec, &p);
    assert!(rep.max_drift_mass < 1e-9, "mass drift {:e}", rep.max_drift_mass);
    for st in &rec.states {
        assert!(st.v.hermitian_defect() < 1e-10);
    }
}

#[test]
fn momentum_and_energy_drift_at_fourth_order() {
    let g = Grid::new(128, 20.0).unwrap();
    let s0 = smooth_data(g, 1.0);
    let p = CouplingParams::new(1.0, 1.0, 1.0);
    let drift = |dt: f64| {
        let cfg = EvolveConfig { dt, t_end: 0.5, record_stride: 8, stability_c: 1e9, ..Default::default() };
        conservation_report(&evolve(&s0, &cfg, &p).unwrap(), &p)
    };
    // finer steps put the momentum drift at rounding level
    let a = drift(0.5 / 128.0);
    let b = drift(0.5 / 256.0);
    let om = (a.max_drift_momentum / b.max_drift_momentum).log2();
    let oe = (a.max_drift_energy / b.max_drift_energy).log2();
    assert!(om > 3.5, "momentum drift order {om}: {:e} -> {:e}", a.max_drift_momentum, b.max_drift_momentum);
    assert!(oe > 3.5, "energy drift order {oe}: {:e} -> {:e}", a.max_drift_energy, b.max_drift_energy);
    assert!(b.max_drift_momentum < 1e-8 && b.max_drift_energy < 1e-8);
}

/// Time derivatives of the eight basis integrals, by a central difference of RK4 steps.
fn basis_rates(s: &SpectralState, p: &CouplingParams) -> [f64; 8] {
    let cfg = EvolveConfig::default();
    let h = 1e-4;
    let plus = basis_integrals(&step(s, h, &cfg, p).unwrap());
    let minus = basis_integrals(&step(s, -h, &cfg, p).unwrap());
    let mut d = [0.0; 8];
    for k in 0..8 {
        d[k] = (plus[k] - minus[k]) / (2.0 * h);
    }
    d
}

#[test]
fn functional_coefficients_solve_the_drift_system() {
    // coefficients are recovered from finite-difference rates along runs, not assumed
    let (alpha, beta, gamma) = (1.3, 0.7, 0.9);
    let p = CouplingParams::new(alpha, beta, gamma);
    let g = Grid::new(128, 20.0).unwrap();
    let mut rates = Vec::new();
    for shift in [0.5, 1.5, -1.0] {
        let cfg = EvolveConfig { dt: 2e-3, t_end: 0.2, record_stride: 10, ..Default::default() };
        let rec = evolve(&smooth_data(g, shift), &cfg, &p).unwrap();
        for st in &rec.states {
            rates.push(basis_rates(st, &p));
        }
    }
    let scale = rates.iter().flat_map(|r| r.iter()).fold(0.0f64, |m, x| m.max(x.abs()));
    for r in &rates {
        assert!(r[0].abs() < 1e-7 * scale, "mass rate {:e}", r[0]);
    }

    // momentum: alpha int v^2 + x Im int conj(u) u_x
    let rows: Vec<Vec<f64>> = rates.iter().map(|r| vec![r[1]]).collect();
    let y: Vec<f64> = rates.iter().map(|r| -alpha * r[2]).collect();
    let x = least_squares(&rows, &y).unwrap();
    assert!((x[0] + 2.0 * gamma).abs() < 1e-5, "momentum coefficient {}", x[0]);

    // energy: gamma int |u_x|^2 + the four remaining terms
    let rows: Vec<Vec<f64>> = rates.iter().map(|r| vec![r[4], r[5], r[6], r[7]]).collect();
    let y: Vec<f64> = rates.iter().map(|r| -gamma * r[3]).collect();
    let x = least_squares(&rows, &y).unwrap();
    let want = [alpha * gamma, 0.5 * beta * gamma, 0.5 * alpha, -alpha / 6.0];
    for (got, want) in x.iter().zip(want) {
        assert!((got - want).abs() < 1e-5 * want.abs().max(1.0), "energy coefficients {x:?} vs {want:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mass_and_momentum_rates_vanish(seed in 0u64..1_000_000, t in 0.0f64..2.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let mut s = random_state(64, 12.0, seed);
        s.t = t;
        let p = CouplingParams::new(if a == 0.0 { 1.0 } else { a }, b, 1.0);
        let d = rhs_classical(&s, &p, DealiasRule::TwoThirds).unwrap();
        let g = s.grid();
        let c = g.conv_measure();
        let mut dm = 0.0;
        let mut du_mom = 0.0;
        let mut dv_mom = 0.0;
        let mut size = 0.0;
        for i in 0..g.n_points {
            let xi = g.freq(i);
            let ru = 2.0 * (s.u.coeffs[i].conj() * d.u.coeffs[i]).re;
            dm += ru;
            du_mom += xi * ru;
            dv_mom += 2.0 * (s.v.coeffs[i].conj() * d.v.coeffs[i]).re;
            size += (s.u.coeffs[i].norm() + s.v.coeffs[i].norm()) * (d.u.coeffs[i].norm() + d.v.coeffs[i].norm()) * (1.0 + xi.abs());
        }
        let dp = p.alpha * dv_mom - 2.0 * p.gamma * du_mom;
        prop_assert!((dm * c).abs() <= 1e-12 * size * c);
        prop_assert!((dp * c).abs() <= 1e-12 * size * c);
        prop_assert!(d.v.hermitian_defect() == 0.0);
    }

    #[test]
    fn functionals_are_time_shift_covariant(seed in 0u64..1_000_000, t in 0.0f64..3.0) {
        // the same physical data at another time gives the same functionals
        let s = random_state(64, 12.0, seed);
        let (u, v) = s.physical_spectra();
        let shifted = SpectralState::from_physical_spectra(t, &u, &v).unwrap();
        let p = CouplingParams::default();
        let (a, b) = (functionals(&s, &p), functionals(&shifted, &p));
        let tol = 1e-10 * (1.0 + a.energy.abs());
        prop_assert!((a.mass - b.mass).abs() < tol && (a.momentum - b.momentum).abs() < tol && (a.energy - b.energy).abs() < tol);
    }
}
