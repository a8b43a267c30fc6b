//! One PASS/FAIL line per acceptance criterion. Tolerances and time budgets are fixed here.
//!
//! Built without the libtest harness so the table is printed on every run.

use std::process::Command as Proc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skdv_core::counterexamples::{dyadic, sec6_v_self_term, Family, GrowthExperiment};
use skdv_core::evolution::{
    conservation_report, evolve, smoothing_probe, CouplingParams, EvolveConfig, EvolveMode, RunRecord, SmoothingQuery,
    SpectralState,
};
use skdv_core::fre::{divergence_check, sweep_and_fit, FreQuery, Lattice};
use skdv_core::resonance::{
    nls_cubic_factored, phase_composition_check, phase_raw, phi_u1_factored, phi_v1_factored, phi_v2_factored, PhaseId,
    RegionParams, COMPOSITIONS,
};
use skdv_core::spectral::{to_physical, to_spectral, FieldKind, Grid, Regularity};
use skdv_core::Complex64;

const PHASE_TOL: f64 = 1e-9;
const PHASE_SAMPLES: usize = 100_000;
const SOLITON_TOL: f64 = 1e-6;
const PLANE_WAVE_TOL: f64 = 1e-8;
const RK4_ORDER_TOL: f64 = 0.1;
const MASS_DRIFT_TOL: f64 = 1e-9;
/// momentum and energy drift must fall at the integrator's order 4 within this margin
const DRIFT_ORDER_TOL: f64 = 0.5;
const FORMULATION_TOL: f64 = 1e-6;
const FRE_EXPONENT_MAX: f64 = 1.05;
const DUALIZED_SLOPE_TOL: f64 = 0.1;
const ITERATE_SLOPE_TOL: f64 = 0.15;
const SMOOTHING_EXCESS: f64 = 0.1;

const BUDGETS: [Duration; 10] = [
    Duration::from_secs(1),
    Duration::from_secs(60),
    Duration::from_secs(120),
    Duration::from_secs(300),
    Duration::from_secs(600),
    Duration::from_secs(300),
    Duration::from_secs(120),
    Duration::from_secs(300),
    Duration::from_secs(600),
    Duration::from_secs(300),
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn sech2(x: f64) -> f64 {
    1.0 / x.cosh().powi(2)
}

fn state_from_physical(g: Grid, u: impl Fn(f64) -> Complex64, v: impl Fn(f64) -> f64) -> SpectralState {
    let xs = g.xs();
    let uu: Vec<Complex64> = xs.iter().map(|&x| u(x)).collect();
    let vv: Vec<Complex64> = xs.iter().map(|&x| Complex64::new(v(x), 0.0)).collect();
    let u = to_spectral(&uu, g, FieldKind::ULike).unwrap().dealias();
    let v = to_spectral(&vv, g, FieldKind::VLike).unwrap().dealias();
    SpectralState::new(0.0, u, v).unwrap()
}

fn final_of(rec: RunRecord) -> SpectralState {
    rec.final_state.unwrap()
}

fn phase_algebra() -> Outcome {
    let mut all = true;
    for c in COMPOSITIONS {
        all &= phase_composition_check(c.outer, c.inner, c.slot, PHASE_SAMPLES, 11).unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    for _ in 0..PHASE_SAMPLES {
        let scale = 10f64.powf(rng.random_range(-1.0..3.0));
        let [a, b, c]: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0) * scale);
        worst = worst
            .max(rel(phi_u1_factored(a, b), phase_raw(PhaseId::PhiU1, a + b, &[a, b])))
            .max(rel(phi_v1_factored(a, b), phase_raw(PhaseId::PhiV1, a + b, &[a, b])))
            .max(rel(phi_v2_factored(a, b), phase_raw(PhaseId::PhiV2, a + b, &[a, b])))
            .max(rel(nls_cubic_factored(a, b, c), phase_raw(PhaseId::NlsCubic, a + b + c, &[a, b, c])));
    }
    outcome(all && worst < PHASE_TOL, format!("8 compositions hold: {all}; worst factored-form defect {worst:.2e}"))
}

fn solver() -> Outcome {
    let g = Grid::new(1024, 128.0).unwrap();
    let s0 = state_from_physical(g, |_| Complex64::new(0.0, 0.0), |x| 3.0 * sech2(0.5 * x));
    let cfg = EvolveConfig { dt: 1e-3, t_end: 1.0, record_stride: 1000, ..Default::default() };
    let (_, vh) = final_of(evolve(&s0, &cfg, &CouplingParams::decoupled(0.0, 0.0, 0.0, 1.0)).unwrap()).physical_spectra();
    let v = to_physical(&vh);
    let soliton = (g.xs().iter().zip(&v).map(|(&x, z)| (z.re - 3.0 * sech2(0.5 * (x - 1.0))).powi(2) + z.im * z.im).sum::<f64>()
        * g.dx())
    .sqrt();

    let g = Grid::new(64, 2.0 * std::f64::consts::PI).unwrap();
    let (amp, m, beta) = (0.7, 3.0, 1.3);
    let s0 = state_from_physical(g, |x| Complex64::from_polar(amp, m * x), |_| 0.0);
    let cfg = EvolveConfig { dt: 1e-3, t_end: 1.0, record_stride: 1000, ..Default::default() };
    let (uh, _) = final_of(evolve(&s0, &cfg, &CouplingParams::decoupled(0.0, beta, 0.0, 0.0)).unwrap()).physical_spectra();
    let phase = g
        .xs()
        .iter()
        .zip(&to_physical(&uh))
        .map(|(x, z)| (z / Complex64::from_polar(amp, m * x - (m * m + beta * amp * amp))).arg().abs())
        .fold(0.0, f64::max);

    let g = Grid::new(128, 20.0).unwrap();
    let s0 = state_from_physical(
        g,
        |x| Complex64::new((-x * x).exp(), 0.0) + Complex64::from_polar(0.3 * (-(x - 1.0).powi(2)).exp(), 2.0 * x),
        |x| sech2(x) + 0.5 * (-(x + 2.0).powi(2)).exp(),
    );
    let p = CouplingParams::new(1.0, 1.0, 1.0);
    let run = |dt: f64| {
        let cfg = EvolveConfig { dt, t_end: 0.5, record_stride: 1 << 20, stability_c: 1e9, ..Default::default() };
        final_of(evolve(&s0, &cfg, &p).unwrap())
    };
    let reference = run(0.5 / 8192.0);
    let e1 = run(0.5 / 512.0).distance(&reference, 1.0, 1.0).unwrap();
    let e2 = run(0.5 / 1024.0).distance(&reference, 1.0, 1.0).unwrap();
    let order = (e1 / e2).log2();
    outcome(
        soliton < SOLITON_TOL && phase < PLANE_WAVE_TOL && (order - 4.0).abs() <= RK4_ORDER_TOL,
        format!("soliton L2 error {soliton:.2e}; plane-wave phase error {phase:.2e}; RK4 order {order:.3}"),
    )
}

fn conservation_data(g: Grid, shift: f64) -> SpectralState {
    state_from_physical(
        g,
        |x| Complex64::new((-x * x).exp(), 0.0) + Complex64::from_polar(0.4 * (-(x - shift).powi(2)).exp(), 1.5 * x),
        |x| sech2(x + shift) - 0.3 * (-(x - 1.0).powi(2)).exp(),
    )
}

fn conservation() -> Outcome {
    let p = CouplingParams::new(1.0, 1.0, 1.0);
    let s0 = conservation_data(Grid::new(1024, 64.0).unwrap(), 2.0);
    let cfg = EvolveConfig { dt: 1e-4, t_end: 1.0, record_stride: 500, ..Default::default() };
    let mass = conservation_report(&evolve(&s0, &cfg, &p).unwrap(), &p).max_drift_mass;

    let s0 = conservation_data(Grid::new(128, 20.0).unwrap(), 1.0);
    let drift = |dt: f64| {
        let cfg = EvolveConfig { dt, t_end: 0.5, record_stride: 8, stability_c: 1e9, ..Default::default() };
        conservation_report(&evolve(&s0, &cfg, &p).unwrap(), &p)
    };
    let (a, b) = (drift(0.5 / 128.0), drift(0.5 / 256.0));
    let om = (a.max_drift_momentum / b.max_drift_momentum).log2();
    let oe = (a.max_drift_energy / b.max_drift_energy).log2();
    outcome(
        mass < MASS_DRIFT_TOL && om >= 4.0 - DRIFT_ORDER_TOL && oe >= 4.0 - DRIFT_ORDER_TOL,
        format!(
            "mass drift {mass:.2e}; momentum drift {:.2e} -> {:.2e} (order {om:.2}); energy drift {:.2e} -> {:.2e} (order {oe:.2})",
            a.max_drift_momentum, b.max_drift_momentum, a.max_drift_energy, b.max_drift_energy
        ),
    )
}

fn formulations() -> Outcome {
    // L = 10 keeps both interaction regions inside the resolved band
    let g = Grid::new(256, 10.0).unwrap();
    let s0 = state_from_physical(
        g,
        |x| Complex64::new((-x * x).exp(), 0.0) + Complex64::from_polar(0.1 * (-x * x / 2.0).exp(), 25.0 * x),
        |x| sech2(x) + (-x * x / 2.0).exp() * (0.1 * (25.0 * x).cos() + 0.03 * (51.0 * x).cos()),
    );
    let p = CouplingParams::new(1.0, 1.0, 1.0);
    let run = |mode, delta_u, delta_v| {
        let cfg = EvolveConfig {
            dt: 2e-5,
            t_end: 0.5,
            mode,
            region_params: RegionParams { delta_u, delta_v },
            record_stride: 1 << 24,
            ..Default::default()
        };
        final_of(evolve(&s0, &cfg, &p).unwrap())
    };
    let classical = run(EvolveMode::Classical, 0.05, 0.05);
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for mode in [EvolveMode::IbpU, EvolveMode::IbpV] {
        let a = run(mode, 0.05, 0.05);
        let b = run(mode, 0.02, 0.1);
        let (da, dd) = (a.distance(&classical, 1.0, 1.0).unwrap(), a.distance(&b, 1.0, 1.0).unwrap());
        worst = worst.max(da).max(dd);
        parts.push(format!("{mode:?} vs classical {da:.2e}, delta pairs {dd:.2e}"));
    }
    outcome(worst < FORMULATION_TOL, parts.join("; "))
}

fn fre_query(id: &str, r: Regularity, cutoff: f64) -> FreQuery {
    let mut q = FreQuery::catalog(id, r).unwrap();
    q.lattice = Lattice { cutoff, ..q.lattice };
    q
}

fn fre_in_range() -> Outcome {
    let r = Regularity::new(0.5, 0.0, 0.2);
    let (alphas, ms) = (dyadic(6, 14), dyadic(4, 10));
    let mut pass = true;
    let mut parts = Vec::new();
    for id in ["lem:probU", "lem:probV", "lem:1", "lem:2"] {
        let q = fre_query(id, r, 16384.0);
        assert!(q.spec.in_range(&r), "{id} is not interior at {r:?}");
        match sweep_and_fit(&q, &alphas, &ms) {
            Ok(fit) => {
                let flagged = fit.points.iter().filter(|p| p.flagged).count();
                pass &= fit.exponent_m <= FRE_EXPONENT_MAX && fit.exponent_alpha <= FRE_EXPONENT_MAX && flagged == 0;
                parts.push(format!("{id} ({:.2}, {:.2}) flagged {flagged}", fit.exponent_m, fit.exponent_alpha));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{id}: {e}"));
            }
        }
    }
    outcome(pass, format!("exponents (M, alpha) at (0.5, 0, 0.2): {}", parts.join("; ")))
}

fn fre_divergence() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (id, r) in [("lem:probU", Regularity::new(2.5, 0.0, 0.0)), ("lem:probV", Regularity::new(0.0, 1.5, 0.0))] {
        let d = divergence_check(&fre_query(id, r, 4096.0), &[1024.0, 2048.0, 4096.0], 16.0).unwrap();
        let monotone = d.constants.windows(2).all(|w| w[1] > w[0]);
        pass &= d.diverging && monotone;
        let c: Vec<String> = d.constants.iter().map(|c| format!("{c:.3e}")).collect();
        parts.push(format!("{id} k-s={} constants [{}]", r.k - r.s, c.join(", ")));
    }
    outcome(pass, parts.join("; "))
}

fn growth(family: Family, k: f64, s: f64, rho: Option<f64>, ns: Vec<f64>) -> (f64, f64) {
    let e = GrowthExperiment::new(family, ns, Regularity::new(k, s, 0.0), 0.1, rho).unwrap();
    let f = e.run().unwrap().fit.unwrap();
    (f.slope, f.predicted)
}

fn dualized_slopes() -> Outcome {
    let (a, pa) = growth(Family::Cor41, 3.5, 0.0, None, dyadic(4, 10));
    let (b, pb) = growth(Family::Cor42, 0.0, 2.0, None, dyadic(4, 10));
    outcome(
        (a - pa).abs() <= DUALIZED_SLOPE_TOL && (b - pb).abs() <= DUALIZED_SLOPE_TOL,
        format!("cor41 k-s=3.5 slope {a:.3} vs {pa:.3}; cor42 k-s=-2 slope {b:.3} vs {pb:.3}"),
    )
}

fn iterate_slopes() -> Outcome {
    let (a, pa) = growth(Family::Sec6U, 3.5, 0.0, None, dyadic(3, 9));
    let (b, pb) = growth(Family::Sec6V, 0.0, 4.5, Some(2.0), dyadic(4, 12));
    let r = Regularity::new(0.0, 4.5, 0.0);
    let self_term = dyadic(4, 12)
        .into_iter()
        .map(|n| sec6_v_self_term(n, &r, 0.1, Default::default(), Default::default()))
        .fold(0.0, f64::max);
    outcome(
        (a - pa).abs() <= ITERATE_SLOPE_TOL && (b - pb).abs() <= ITERATE_SLOPE_TOL && self_term == 0.0,
        format!("sec6_u k=3.5 slope {a:.3} vs {pa:.3}; sec6_v s=4.5 rho=2 slope {b:.3} vs {pb:.3}; self term {self_term:e}"),
    )
}

fn smoothing() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (component, k, s) in [("duhamel_u_cubic", 0.75, 0.0), ("boundary_u", 2.5, 0.0)] {
        let q = SmoothingQuery::new(component.parse().unwrap(), Regularity::new(k, s, 0.0), (1..=10).collect());
        let f = smoothing_probe(&q).unwrap();
        let sup = f.claimed_sup.expect("claimed supremum");
        let min = f.eps_hat.iter().cloned().fold(f64::INFINITY, f64::min);
        pass &= f.in_range && min > 0.0 && f.mean <= sup + SMOOTHING_EXCESS;
        parts.push(format!("{component} at ({k}, {s}): mean {:.3} +- {:.3}, min {min:.3}, sup {sup}", f.mean, f.std));
    }
    outcome(pass, parts.join("; "))
}

fn determinism() -> Outcome {
    let runs: [(&[&str], &str); 3] = [
        (&["evolve", "--data", "random", "--seed", "5", "--t-end", "0.2", "--n", "128"], "evolution.csv"),
        (&["counterexample", "--family", "cor41", "--kminus-s", "3.5"], "counterexample.csv"),
        (&["fre", "--id", "lem:probU", "--k", "1", "--s", "0", "--eps", "0.3"], "fre_sweep.csv"),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (args, csv) in runs {
        let bytes: Vec<Vec<u8>> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().unwrap();
                let st = Proc::new(env!("CARGO_BIN_EXE_skdv")).args(args).arg("--out-dir").arg(dir.path()).output().unwrap();
                assert!(st.status.code().is_some());
                std::fs::read(dir.path().join(csv)).unwrap_or_default()
            })
            .collect();
        let same = !bytes[0].is_empty() && bytes[0] == bytes[1];
        pass &= same;
        parts.push(format!("{} {csv}: {} bytes, identical {same}", args[0], bytes[0].len()));
    }
    outcome(pass, parts.join("; "))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("phase algebra", phase_algebra),
        ("solver correctness", solver),
        ("conservation", conservation),
        ("formulation equivalence", formulations),
        ("FRE in-range scaling", fre_in_range),
        ("FRE out-of-range divergence", fre_divergence),
        ("dualized-form slopes", dualized_slopes),
        ("iterate slopes", iterate_slopes),
        ("smoothing probes", smoothing),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, ((name, f), budget)) in criteria.into_iter().zip(BUDGETS).enumerate() {
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let in_time = took <= budget;
        let pass = o.pass && in_time;
        let verdict = if pass { "PASS" } else { "FAIL" };
        let time_note = if in_time { String::new() } else { " over budget".to_string() };
        println!(
            "criterion {}: {verdict} {name} [{:.1}s of {}s{time_note}] {}",
            i + 1,
            took.as_secs_f64(),
            budget.as_secs(),
            o.detail
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
