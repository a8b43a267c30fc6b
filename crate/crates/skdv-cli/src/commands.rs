//! One runner per subcommand. Each stages its artifacts and returns the checks it made.

use anyhow::{anyhow, Context, Result};
use serde::Serialize;
use serde_json::json;

use skdv_core::counterexamples::{sec6_v_self_term, Family, GrowthReport, CSV_HEADER};
use skdv_core::evolution::{
    conservation_report, evolve, smoothing_probe, CouplingParams, EvolveConfig, EvolveError, RunRecord, SmoothingQuery,
    SpectralState,
};
use skdv_core::fre::{
    catalog, divergence_check, reconstruct_admissible, regime_entries, sweep_and_fit, CatalogSummary, FreError, FreQuery, Lattice,
};
use skdv_core::par::Parallelism;
use skdv_core::resonance::{phase_catalog, RegionParams};
use skdv_core::spectral::{
    bourgain_norm, field_to_binary, random_sobolev_data, to_spectral, Dispersion, FieldKind, Grid, SpectralField,
};
use skdv_core::Complex64;

use crate::config::{Command, ExperimentConfig, FreMode, InitialData};
use crate::output::{f, Artifacts, Check};

pub struct Outcome {
    pub checks: Vec<Check>,
    pub extra: Option<serde_json::Value>,
}

pub fn dispatch(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Outcome> {
    match cfg.command {
        Command::Evolve => run_evolve(cfg, out),
        Command::Bourgain => run_bourgain(cfg, out),
        Command::Fre => run_fre(cfg, out),
        Command::Counterexample => run_counterexample(cfg, out),
        Command::Smoothing => run_smoothing(cfg, out),
        Command::Catalog => run_catalog(cfg, out),
    }
}

fn parallelism(cfg: &ExperimentConfig) -> Parallelism {
    if cfg.sequential {
        Parallelism::SEQUENTIAL
    } else {
        Parallelism::PARALLEL
    }
}

fn region_params(cfg: &ExperimentConfig) -> RegionParams {
    RegionParams { delta_u: cfg.regions.delta_u, delta_v: cfg.regions.delta_v }
}

fn sech2(x: f64) -> f64 {
    1.0 / x.cosh().powi(2)
}

fn from_physical(g: Grid, u: impl Fn(f64) -> Complex64, v: impl Fn(f64) -> f64) -> Result<(SpectralField, SpectralField)> {
    let xs = g.xs();
    let uu: Vec<Complex64> = xs.iter().map(|&x| u(x)).collect();
    let vv: Vec<Complex64> = xs.iter().map(|&x| Complex64::new(v(x), 0.0)).collect();
    Ok((to_spectral(&uu, g, FieldKind::ULike)?, to_spectral(&vv, g, FieldKind::VLike)?))
}

pub fn initial_state(cfg: &ExperimentConfig) -> Result<SpectralState> {
    let e = &cfg.evolve;
    let g = Grid::new(e.n, e.length)?;
    let a = e.amplitude;
    let (u, v) = match e.data {
        InitialData::Smooth => from_physical(
            g,
            |x| (Complex64::new((-x * x).exp(), 0.0) + Complex64::from_polar(0.4 * (-(x - 2.0).powi(2)).exp(), 1.5 * x)) * a,
            |x| a * (sech2(x + 2.0) - 0.3 * (-(x - 1.0).powi(2)).exp()),
        )?,
        InitialData::Soliton => {
            let c = e.soliton_speed;
            from_physical(g, |_| Complex64::new(0.0, 0.0), |x| 3.0 * c * sech2(0.5 * c.sqrt() * x))?
        }
        InitialData::Random => {
            let r = cfg.effective_regularity();
            let scale = |mut fld: SpectralField| {
                fld.coeffs.iter_mut().for_each(|c| *c *= a);
                fld
            };
            (
                scale(random_sobolev_data(g, r.k, r.eta_plus, cfg.seed, FieldKind::ULike)),
                scale(random_sobolev_data(g, r.s, r.eta_plus, cfg.seed ^ 0x9e37_79b9_7f4a_7c15, FieldKind::VLike)),
            )
        }
    };
    let rule = e.dealias;
    Ok(SpectralState::new(0.0, u.dealias_with(rule), v.dealias_with(rule))?)
}

fn evolve_config(cfg: &ExperimentConfig) -> EvolveConfig {
    let e = &cfg.evolve;
    let r = cfg.effective_regularity();
    EvolveConfig {
        dt: e.dt,
        t_end: e.t_end,
        mode: e.mode,
        region_params: region_params(cfg),
        dealias_rule: e.dealias,
        record_stride: e.record_stride,
        k: r.k,
        s: r.s,
        stability_c: e.stability_c,
        parallelism: parallelism(cfg),
        ..Default::default()
    }
}

fn coupling(cfg: &ExperimentConfig) -> CouplingParams {
    CouplingParams::new(cfg.evolve.alpha, cfg.evolve.beta, cfg.evolve.gamma)
}

pub fn evolution_csv(rec: &RunRecord) -> String {
    let mut s = String::from("t,mass,momentum,energy,norm_Hk,norm_Hs\n");
    for d in &rec.diagnostics {
        s.push_str(&format!("{},{},{},{},{},{}\n", f(d.t), f(d.mass), f(d.momentum), f(d.energy), f(d.norm_hk), f(d.norm_hs)));
    }
    s
}

/// Run the evolution, staging the time series even when the solver stops early.
fn staged_evolution(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(SpectralState, RunRecord)> {
    let s0 = initial_state(cfg)?;
    match evolve(&s0, &evolve_config(cfg), &coupling(cfg)) {
        Ok(rec) => {
            out.write("evolution.csv", evolution_csv(&rec).as_bytes())?;
            Ok((s0, rec))
        }
        Err(err) => {
            if let EvolveError::NonFinite { record, .. } | EvolveError::BlowUp { record, .. } = &err {
                out.write("evolution.csv", evolution_csv(record).as_bytes())?;
            }
            Err(anyhow!(err)).context("evolution stopped")
        }
    }
}

fn data_hash(s: &SpectralState) -> String {
    let mut bytes = field_to_binary(&s.u);
    bytes.extend(field_to_binary(&s.v));
    crate::output::sha256_hex(&bytes)
}

fn run_evolve(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Outcome> {
    let (s0, rec) = staged_evolution(cfg, out)?;
    let p = coupling(cfg);
    let rep = conservation_report(&rec, &p);
    out.write_json("conservation.json", &rep)?;
    if cfg.evolve.dump_states {
        for (i, st) in rec.states.iter().enumerate() {
            out.write(&format!("state_{i:05}_u.bin"), &field_to_binary(&st.u))?;
            out.write(&format!("state_{i:05}_v.bin"), &field_to_binary(&st.v))?;
        }
    }
    let checks = vec![Check::at_most("mass_drift", rep.max_drift_mass, 0.0, cfg.tolerances.mass_drift)];
    let extra = json!({
        "grid": { "n_points": s0.grid().n_points, "length": s0.grid().length },
        "params": p,
        "seeds": [cfg.seed],
        "initial_data_sha256": data_hash(&s0),
        "substeps": rec.substeps,
        "guard_u": rec.guard_u,
        "guard_v": rec.guard_v,
        "max_drift": { "mass": rep.max_drift_mass, "momentum": rep.max_drift_momentum, "energy": rep.max_drift_energy },
    });
    Ok(Outcome { checks, extra: Some(extra) })
}

fn run_bourgain(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Outcome> {
    let (s0, rec) = staged_evolution(cfg, out)?;
    let r = cfg.effective_regularity();
    let us: Vec<SpectralField> = rec.states.iter().map(|s| s.u.clone()).collect();
    let vs: Vec<SpectralField> = rec.states.iter().map(|s| s.v.clone()).collect();
    let taper = cfg.bourgain.taper;
    let norms = json!({
        "u_x_k_b": bourgain_norm(&rec.times, &us, r.k, r.b, Dispersion::Schrodinger, taper)?,
        "u_x_k_bprime": bourgain_norm(&rec.times, &us, r.k, r.b_prime, Dispersion::Schrodinger, taper)?,
        "v_y_s_b": bourgain_norm(&rec.times, &vs, r.s, r.b, Dispersion::Airy, taper)?,
        "v_y_s_bprime": bourgain_norm(&rec.times, &vs, r.s, r.b_prime, Dispersion::Airy, taper)?,
        "k": r.k, "s": r.s, "b": r.b, "b_prime": r.b_prime, "taper": taper, "samples": rec.times.len(),
    });
    out.write_json("bourgain.json", &norms)?;
    let finite = ["u_x_k_b", "u_x_k_bprime", "v_y_s_b", "v_y_s_bprime"].iter().all(|k| norms[k].as_f64().is_some_and(|x| x.is_finite() && x >= 0.0));
    let checks = vec![Check::boolean("bourgain_norms_finite", finite, true)];
    Ok(Outcome { checks, extra: Some(json!({ "initial_data_sha256": data_hash(&s0), "norms": norms })) })
}

fn dyadic(r: [i32; 2]) -> Vec<f64> {
    (r[0]..=r[1]).map(|e| 2f64.powi(e)).collect()
}

fn fre_template(cfg: &ExperimentConfig) -> Result<FreQuery> {
    let fb = &cfg.fre;
    let mut q = FreQuery::catalog(&fb.id, cfg.effective_regularity())?;
    q.region_params = region_params(cfg);
    q.lattice = Lattice { cutoff: fb.cutoff, per_octave: fb.per_octave, rays_per_decade: fb.rays_per_decade };
    q.check_refinement = fb.check_refinement;
    q.parallelism = parallelism(cfg);
    Ok(q)
}

fn run_fre(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Outcome> {
    let fb = &cfg.fre;
    let q = fre_template(cfg)?;
    let r = q.regularity;
    let in_range = q.spec.in_range(&r);
    let claim = q.spec.claim;
    match fb.mode {
        FreMode::Scaling => {
            let fit = match sweep_and_fit(&q, &dyadic(fb.alpha_exp), &dyadic(fb.m_exp)) {
                Ok(fit) => fit,
                Err(FreError::FitRefused { excluded, total }) => {
                    let checks = vec![Check::at_most("flagged_fraction", excluded as f64 / total as f64, 0.0, cfg.tolerances.max_flagged_fraction)
                        .with_note("fit refused")];
                    return Ok(Outcome { checks, extra: None });
                }
                Err(e) => return Err(e.into()),
            };
            let mut csv = String::from("estimate_id,k,s,eps,alpha,M,value,flag\n");
            for p in &fit.points {
                let flag = if p.flagged {
                    "flagged"
                } else if p.boundary {
                    "boundary"
                } else {
                    "ok"
                };
                csv.push_str(&format!("{},{},{},{},{},{},{},{}\n", fb.id, f(r.k), f(r.s), f(r.eps), f(p.alpha), f(p.m), f(p.value), flag));
            }
            out.write("fre_sweep.csv", csv.as_bytes())?;
            let flagged = fit.points.iter().filter(|p| p.flagged).count();
            let fraction = flagged as f64 / fit.points.len().max(1) as f64;
            let report = json!({
                "estimate_id": fb.id, "k": r.k, "s": r.s, "eps": r.eps, "in_range": in_range,
                "exponent_m": fit.exponent_m, "exponent_alpha": fit.exponent_alpha,
                "claimed_exponent_m": claim.m, "claimed_exponent_alpha": claim.alpha,
                "intercept": fit.intercept, "r_squared": fit.r_squared,
                "points": fit.points.len(), "flagged": flagged, "excluded": fit.excluded,
                "cutoff": fb.cutoff,
            });
            out.write_json("fre_fit.json", &report)?;
            let tol = cfg.tolerances.exponent_excess;
            let mut checks = vec![
                Check::at_most("exponent_M", fit.exponent_m, claim.m, tol),
                Check::at_most("exponent_alpha", fit.exponent_alpha, claim.alpha, tol),
                Check::at_most("flagged_fraction", fraction, 0.0, cfg.tolerances.max_flagged_fraction),
            ];
            if !in_range {
                checks.iter_mut().for_each(|c| c.note = Some("point outside the estimate's range".into()));
            }
            Ok(Outcome { checks, extra: Some(report) })
        }
        FreMode::Divergence => {
            let d = divergence_check(&q, &fb.divergence_cutoffs, fb.divergence_m)?;
            let mut csv = String::from("estimate_id,k,s,eps,cutoff,M,constant\n");
            for (x, c) in d.cutoffs.iter().zip(&d.constants) {
                csv.push_str(&format!("{},{},{},{},{},{},{}\n", fb.id, f(r.k), f(r.s), f(r.eps), f(*x), f(fb.divergence_m), f(*c)));
            }
            out.write("fre_divergence.csv", csv.as_bytes())?;
            let report = json!({ "estimate_id": fb.id, "k": r.k, "s": r.s, "eps": r.eps, "in_range": in_range, "report": d });
            out.write_json("fre_divergence.json", &report)?;
            let note = if in_range { "in range: bounded constant expected" } else { "out of range: divergence expected" };
            let checks = vec![Check::boolean("cutoff_divergence", d.diverging, !in_range).with_note(note)];
            Ok(Outcome { checks, extra: Some(report) })
        }
    }
}

#[derive(Serialize)]
struct GrowthFitOut<'a> {
    family: Family,
    k: f64,
    s: f64,
    rho: Option<f64>,
    c_time: f64,
    n_values: &'a [f64],
    values: &'a [f64],
    fit: &'a Option<skdv_core::counterexamples::SlopeFit>,
}

pub fn growth_csv(reports: &[GrowthReport]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in reports {
        s.extend(r.to_csv().lines().skip(1).map(|l| format!("{l}\n")));
    }
    s
}

fn run_counterexample(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Outcome> {
    let mut e = cfg.growth_experiment()?;
    e.parallelism = parallelism(cfg);
    let reports = if cfg.counterexample.c_sweep { e.c_time_sweep()? } else { vec![e.run()?] };
    out.write("counterexample.csv", growth_csv(&reports).as_bytes())?;
    let fits: Vec<GrowthFitOut> = reports
        .iter()
        .map(|r| GrowthFitOut {
            family: r.experiment.family,
            k: r.experiment.regularity.k,
            s: r.experiment.regularity.s,
            rho: r.experiment.rho,
            c_time: r.experiment.c_time,
            n_values: &r.experiment.n_values,
            values: &r.values,
            fit: &r.fit,
        })
        .collect();
    out.write_json("counterexample_fit.json", &fits)?;
    let tol = match e.family {
        Family::Cor41 | Family::Cor42 => cfg.tolerances.slope_dualized,
        Family::Sec6U | Family::Sec6V => cfg.tolerances.slope_iterate,
    };
    let mut checks = Vec::new();
    for r in &reports {
        let tag = if reports.len() > 1 { format!("[c={}]", r.experiment.c_time) } else { String::new() };
        match &r.fit {
            Some(fit) => {
                checks.push(Check::near(format!("slope{tag}"), fit.slope, fit.predicted, tol));
                if fit.predicted > 0.0 {
                    checks.push(Check::above(format!("divergence{tag}"), fit.slope, 0.0).with_note("positive slope expected"));
                }
            }
            None => checks.push(Check::boolean(format!("fit{tag}"), false, true).with_note("fewer than two positive values")),
        }
    }
    if e.family == Family::Sec6V {
        let worst = e
            .n_values
            .iter()
            .map(|&n| sec6_v_self_term(n, &e.regularity, e.c_time, e.quadrature, e.parallelism))
            .fold(0.0, f64::max);
        checks.push(Check::boolean("self_term_zero_above_2", worst == 0.0, true));
    }
    Ok(Outcome { checks, extra: None })
}

fn run_smoothing(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Outcome> {
    let sb = &cfg.smoothing;
    let component = sb.parsed_component().map_err(|e| anyhow!(e))?;
    let seeds: Vec<u64> = (0..sb.seeds as u64).map(|i| cfg.seed + i).collect();
    let mut q = SmoothingQuery::new(component, cfg.effective_regularity(), seeds.clone());
    q.region_params = region_params(cfg);
    q.amplitude = sb.amplitude;
    q.t = sb.t;
    q.parallelism = parallelism(cfg);
    if sb.n.is_some() || sb.length.is_some() {
        q.grid = Grid::new(sb.n.unwrap_or(q.grid.n_points), sb.length.unwrap_or(q.grid.length))?;
    }
    let fit = smoothing_probe(&q)?;
    let mut csv = String::from("component,k,s,seed,eps_hat\n");
    for (seed, e) in seeds.iter().zip(&fit.eps_hat) {
        csv.push_str(&format!("{},{},{},{},{}\n", component, f(fit.k), f(fit.s), seed, f(*e)));
    }
    out.write("smoothing.csv", csv.as_bytes())?;
    out.write_json("smoothing_fit.json", &fit)?;
    let mut checks = Vec::new();
    match fit.claimed_sup {
        Some(sup) if fit.in_range && !fit.empty => {
            let min = fit.eps_hat.iter().cloned().fold(f64::INFINITY, f64::min);
            checks.push(Check::above("min_eps_hat", min, 0.0).with_note("every seed must gain"));
            checks.push(Check::at_most("mean_eps_hat", fit.mean, sup, cfg.tolerances.smoothing_excess));
        }
        _ => {}
    }
    Ok(Outcome { checks, extra: None })
}

#[derive(Serialize)]
struct RegimeOut {
    regime: &'static str,
    estimates: Vec<&'static str>,
    band: Vec<skdv_core::fre::HalfPlane>,
}

fn run_catalog(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Outcome> {
    let estimates: Vec<CatalogSummary> = catalog().iter().map(CatalogSummary::from).collect();
    let regimes: Vec<RegimeOut> =
        regime_entries().into_iter().map(|(regime, estimates, band)| RegimeOut { regime, estimates, band }).collect();
    let [lo, hi] = cfg.catalog.band;
    let doc = json!({
        "phases": phase_catalog(),
        "estimates": estimates,
        "regimes": regimes,
        "admissible": reconstruct_admissible(lo, hi),
    });
    out.write_json("catalog.json", &doc)?;
    Ok(Outcome { checks: Vec::new(), extra: None })
}
