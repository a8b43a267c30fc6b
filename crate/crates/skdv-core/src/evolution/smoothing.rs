//! Numerical smoothing probes: how much faster than the data does a nonlinear term decay?
//!
//! Random data with `|c(xi)| ~ <xi>^{-sigma - 1/2 - eta}` sits in `H^{sigma + eta -}`. If the
//! shell-averaged output decays like `<xi>^{-p}` it sits in `H^{p - 1/2 -}`, so the measured
//! gain is `p - 1/2 - sigma_out - eta`, with `sigma_out` the regularity of the output slot.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::operators::{apply_b, apply_n, Branch, IbpOperators};
use super::{EvolveError, SpectralState};
use crate::fit::linear_fit;
use crate::fre::catalog_lookup;
use crate::par::Parallelism;
use crate::resonance::{duhamel_kernel, phase_raw, PhaseId, RegionParams, DEFAULT_GUARD};
use crate::spectral::{japanese, random_sobolev_data, DealiasRule, FieldKind, Grid, Regularity, SpectralField};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingComponent {
    /// `int_0^t` of the `u v` term of the u equation.
    DuhamelUCoupling,
    /// `int_0^t` of `|u|^2 u`, exact resonances `xi1 = xi` or `xi3 = xi` removed.
    DuhamelUCubic,
    /// `int_0^t` of the `(|u|^2)_x` term of the v equation.
    DuhamelVCoupling,
    BoundaryU,
    BoundaryV,
    /// `N_j` of the given branch from the integrated-by-parts formulation.
    N { j: usize, branch: Branch },
}

impl SmoothingComponent {
    /// The output is a Schrodinger-type field measured against `k`, otherwise against `s`.
    pub fn output_is_u(&self) -> bool {
        match self {
            Self::DuhamelUCoupling | Self::DuhamelUCubic | Self::BoundaryU => true,
            Self::DuhamelVCoupling | Self::BoundaryV => false,
            Self::N { branch, .. } => *branch == Branch::U,
        }
    }

    /// Catalog estimates whose gain bounds apply; the claimed supremum is their minimum.
    pub fn catalog_ids(&self) -> Vec<&'static str> {
        match self {
            Self::DuhamelUCoupling => vec!["lem:1", "lem:probU"],
            Self::DuhamelUCubic => vec!["lem:smooth_nls"],
            Self::DuhamelVCoupling => vec!["lem:2", "lem:probV"],
            Self::BoundaryU => vec!["lem:bdryHs-u"],
            Self::BoundaryV => vec!["lem:bdryHs-v"],
            Self::N { j, branch: Branch::U } => match j {
                0 => vec!["lem:1"],
                1 => vec!["lem:3"],
                2 => vec!["lem:4"],
                3 => vec!["lem:5"],
                4 => vec!["lem:6"],
                _ => vec!["lem:smooth_nls"],
            },
            Self::N { j, branch: Branch::V } => match j {
                0 => vec!["lem:2"],
                1 => vec!["lem:7"],
                2 => vec!["lem:8"],
                5 => vec!["lem:est_dxv2-high"],
                _ => vec![],
            },
        }
    }

    /// Lattice the probe runs on unless the query overrides it.
    pub fn default_grid(&self) -> (Grid, DealiasRule) {
        let two_pi = 2.0 * std::f64::consts::PI;
        let g = |n: usize, l: f64| Grid::new(n, l).expect("power of two");
        match self {
            Self::DuhamelUCubic => (g(1024, two_pi), DealiasRule::Half),
            Self::DuhamelUCoupling | Self::DuhamelVCoupling => (g(4096, two_pi), DealiasRule::Half),
            Self::BoundaryU => (g(1 << 14, 64.0), DealiasRule::Half),
            Self::BoundaryV => (g(2048, two_pi), DealiasRule::Half),
            Self::N { branch: Branch::U, .. } => (g(4096, 4.0 * two_pi), DealiasRule::Half),
            Self::N { branch: Branch::V, .. } => (g(2048, two_pi), DealiasRule::Half),
        }
    }
}

impl fmt::Display for SmoothingComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DuhamelUCoupling => write!(f, "duhamel_u_coupling"),
            Self::DuhamelUCubic => write!(f, "duhamel_u_cubic"),
            Self::DuhamelVCoupling => write!(f, "duhamel_v_coupling"),
            Self::BoundaryU => write!(f, "boundary_u"),
            Self::BoundaryV => write!(f, "boundary_v"),
            Self::N { j, branch } => write!(f, "n{j}_{}", if *branch == Branch::U { "u" } else { "v" }),
        }
    }
}

impl FromStr for SmoothingComponent {
    type Err = String;

    /// Names as printed by `Display`, e.g. `boundary_u` or `n3_v`.
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "duhamel_u_coupling" => Self::DuhamelUCoupling,
            "duhamel_u_cubic" => Self::DuhamelUCubic,
            "duhamel_v_coupling" => Self::DuhamelVCoupling,
            "boundary_u" => Self::BoundaryU,
            "boundary_v" => Self::BoundaryV,
            _ => {
                let bad = || format!("unknown smoothing component `{s}`");
                let rest = s.strip_prefix('n').ok_or_else(bad)?;
                let (j, b) = rest.split_once('_').ok_or_else(bad)?;
                let j: usize = j.parse().map_err(|_| bad())?;
                let branch = match b {
                    "u" => Branch::U,
                    "v" => Branch::V,
                    _ => return Err(bad()),
                };
                if j > 5 {
                    return Err(bad());
                }
                Self::N { j, branch }
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct SmoothingQuery {
    pub component: SmoothingComponent,
    pub regularity: Regularity,
    pub seeds: Vec<u64>,
    pub grid: Grid,
    pub rule: DealiasRule,
    pub region_params: RegionParams,
    /// Upper end of the Duhamel time integral.
    pub t: f64,
    /// Scale of the random data; `0` gives the empty probe.
    pub amplitude: f64,
    /// Fitted range of `|xi|` as fractions of the largest band frequency.
    pub fit_band: (f64, f64),
    pub parallelism: Parallelism,
}

impl SmoothingQuery {
    pub fn new(component: SmoothingComponent, regularity: Regularity, seeds: Vec<u64>) -> Self {
        let (grid, rule) = component.default_grid();
        let fit_band = match component {
            // the U cutoff |xi1| < |xi|/100 keeps admitting input mass well into the band
            SmoothingComponent::BoundaryU | SmoothingComponent::N { branch: Branch::U, .. } => (0.25, 0.98),
            _ => (1.0 / 32.0, 0.5),
        };
        SmoothingQuery {
            component,
            regularity,
            seeds,
            grid,
            rule,
            region_params: RegionParams::default(),
            t: 1.0,
            amplitude: 1.0,
            fit_band,
            parallelism: Parallelism::default(),
        }
    }

    pub fn validate(&self) -> Result<(), EvolveError> {
        let bad = |m: String| Err(EvolveError::Config(m));
        if self.seeds.is_empty() {
            return bad("seeds must be nonempty".into());
        }
        let (lo, hi) = self.fit_band;
        if !(lo > 0.0 && hi > lo && hi <= 1.0) {
            return bad(format!("fit_band ({lo}, {hi}) must satisfy 0 < lo < hi <= 1"));
        }
        if !(self.t.is_finite() && self.t > 0.0) {
            return bad(format!("t = {} must be positive", self.t));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return bad(format!("amplitude = {} must be nonnegative", self.amplitude));
        }
        if self.rule == DealiasRule::None {
            return bad("smoothing probes need a dealiased band".into());
        }
        self.region_params.validate().map_err(EvolveError::Config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothingFit {
    pub component: SmoothingComponent,
    pub k: f64,
    pub s: f64,
    /// `k` or `s`, whichever the output is measured against.
    pub sigma_out: f64,
    /// Gain per seed, in seed order.
    pub eps_hat: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// Half width of the normal 95% interval of the mean.
    pub ci95: f64,
    pub claim_ids: Vec<&'static str>,
    pub claimed_sup: Option<f64>,
    /// `(k, s)` satisfies the validity conditions of every cited estimate with a positive allowed gain.
    pub in_range: bool,
    /// All outputs vanished on the fitted band, so no gain is defined.
    pub empty: bool,
}

impl SmoothingFit {
    /// Mean gain strictly positive and at most `slack` above the claimed supremum.
    pub fn within_claim(&self, slack: f64) -> bool {
        match self.claimed_sup {
            Some(sup) => !self.empty && self.mean > 0.0 && self.mean <= sup + slack,
            None => false,
        }
    }
}

fn claim(component: &SmoothingComponent, k: f64, s: f64) -> (Vec<&'static str>, Option<f64>, bool) {
    let ids = component.catalog_ids();
    let specs: Vec<_> = ids.iter().filter_map(|id| catalog_lookup(id).ok()).collect();
    if specs.is_empty() {
        return (ids, None, false);
    }
    let sup = specs.iter().map(|e| e.eps_sup(k, s)).fold(f64::INFINITY, f64::min);
    let valid = specs.iter().all(|e| e.valid_at(k, s)) && sup > 0.0;
    (ids, Some(sup), valid)
}

/// Run the probe over every seed. Out-of-range regularities are still computed and flagged.
pub fn smoothing_probe(q: &SmoothingQuery) -> Result<SmoothingFit, EvolveError> {
    q.validate()?;
    let r = q.regularity;
    let ops = match q.component {
        SmoothingComponent::BoundaryU => Some(Branch::U),
        SmoothingComponent::BoundaryV => Some(Branch::V),
        SmoothingComponent::N { branch, .. } => Some(branch),
        _ => None,
    }
    .map(|b| IbpOperators::for_branch(q.grid, q.rule, q.region_params, DEFAULT_GUARD, b).with_parallelism(q.parallelism));
    let mut gains = Vec::with_capacity(q.seeds.len());
    for &seed in &q.seeds {
        let u = random_sobolev_data(q.grid, r.k, r.eta_plus, seed, FieldKind::ULike).dealias_with(q.rule);
        let v = random_sobolev_data(q.grid, r.s, r.eta_plus, seed ^ 0x9e37_79b9_7f4a_7c15, FieldKind::VLike).dealias_with(q.rule);
        let (u, v) = (scale(u, q.amplitude), scale(v, q.amplitude));
        let out = SpectralField { grid: q.grid, coeffs: evaluate(q, &u, &v, ops.as_ref())?, kind: FieldKind::ULike };
        if let Some(p) = spectral_decay_exponent(&out, q.rule, q.fit_band) {
            let sigma_out = if q.component.output_is_u() { r.k } else { r.s };
            gains.push(p - 0.5 - sigma_out - r.eta_plus);
        }
    }
    let (ids, sup, in_range) = claim(&q.component, r.k, r.s);
    let empty = gains.is_empty();
    let n = gains.len() as f64;
    let mean = if empty { f64::NAN } else { gains.iter().sum::<f64>() / n };
    let std = if gains.len() > 1 { (gains.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    Ok(SmoothingFit {
        component: q.component,
        k: r.k,
        s: r.s,
        sigma_out: if q.component.output_is_u() { r.k } else { r.s },
        ci95: if empty { f64::NAN } else { 1.96 * std / n.sqrt() },
        eps_hat: gains,
        mean,
        std,
        claim_ids: ids,
        claimed_sup: sup,
        in_range,
        empty,
    })
}

fn scale(mut f: SpectralField, a: f64) -> SpectralField {
    for c in f.coeffs.iter_mut() {
        *c *= a;
    }
    f
}

fn evaluate(q: &SmoothingQuery, u: &SpectralField, v: &SpectralField, ops: Option<&IbpOperators>) -> Result<Vec<Complex64>, EvolveError> {
    let g = q.grid;
    match q.component {
        SmoothingComponent::DuhamelUCoupling => Ok(bilinear(q, &u.coeffs, &v.coeffs, PhaseId::PhiU1, false)),
        SmoothingComponent::DuhamelVCoupling => {
            let ustar: Vec<Complex64> = (0..g.n_points).map(|i| u.coeffs[g.slot(-g.mode(i))].conj()).collect();
            Ok(bilinear(q, &u.coeffs, &ustar, PhaseId::PhiV1, true))
        }
        SmoothingComponent::DuhamelUCubic => Ok(cubic(q, &u.coeffs)),
        SmoothingComponent::BoundaryU | SmoothingComponent::BoundaryV => {
            let st = SpectralState::new(0.0, u.clone(), v.clone())?;
            let b = if q.component == SmoothingComponent::BoundaryU { Branch::U } else { Branch::V };
            Ok(apply_b(b, &st, ops.expect("operators built")).coeffs)
        }
        SmoothingComponent::N { j, branch } => {
            let st = SpectralState::new(0.0, u.clone(), v.clone())?;
            Ok(apply_n(j, branch, &st, ops.expect("operators built"))?.coeffs)
        }
    }
}

/// Direct Duhamel sum of a quadratic term over non-resonant band pairs, `xi` times it for the v equation.
fn bilinear(q: &SmoothingQuery, a: &[Complex64], b: &[Complex64], phase: PhaseId, times_xi: bool) -> Vec<Complex64> {
    let g = q.grid;
    let kmax = g.band_limit(q.rule);
    let c = g.conv_measure();
    let dxi = g.dxi();
    q.parallelism.map_range(g.n_points, |o| {
        let j = g.mode(o);
        if j.abs() > kmax {
            return ZERO;
        }
        let xi = j as f64 * dxi;
        let mut acc = ZERO;
        for j1 in -kmax..=kmax {
            let j2 = j - j1;
            if j2.abs() > kmax {
                continue;
            }
            let phi = phase_raw(phase, xi, &[j1 as f64 * dxi, j2 as f64 * dxi]);
            // exact lattice resonances have measure zero on the line
            if phi.abs() <= 1e-9 * (1.0 + xi.abs().powi(3)) {
                continue;
            }
            acc += duhamel_kernel(phi, q.t) * a[g.slot(j1)] * b[g.slot(j2)];
        }
        acc * c * if times_xi { xi } else { 1.0 }
    })
}

/// Direct Duhamel sum of `|u|^2 u` over `xi = xi1 - xi2 + xi3`, where
/// `Phi = xi^2 - xi1^2 + xi2^2 - xi3^2 = 2 (xi - xi1)(xi - xi3)`. The exactly resonant
/// terms `xi1 = xi` or `xi3 = xi` are dropped: on the line they have measure zero.
fn cubic(q: &SmoothingQuery, u: &[Complex64]) -> Vec<Complex64> {
    let g = q.grid;
    let kmax = g.band_limit(q.rule);
    let c = g.conv_measure() * g.conv_measure();
    let d2 = g.dxi() * g.dxi();
    q.parallelism.map_range(g.n_points, |o| {
        let j = g.mode(o);
        if j.abs() > kmax {
            return ZERO;
        }
        let mut acc = ZERO;
        for j1 in -kmax..=kmax {
            let a = (j - j1) as f64;
            if a == 0.0 {
                continue;
            }
            let u1 = u[g.slot(j1)];
            let mut inner = ZERO;
            for j3 in -kmax..=kmax {
                let j2 = j1 + j3 - j;
                if j2.abs() > kmax || j3 == j {
                    continue;
                }
                let phi = 2.0 * a * (j - j3) as f64 * d2;
                inner += duhamel_kernel(phi, q.t) * u[g.slot(j2)].conj() * u[g.slot(j3)];
            }
            acc += u1 * inner;
        }
        acc * c
    })
}

/// Decay exponent `p` of the shell-averaged `|F(xi)| ~ <xi>^{-p}` over the band
/// `band.0 * jmax <= |j| < band.1 * jmax`, four shells per octave. `None` when fewer than
/// four shells carry energy.
pub fn spectral_decay_exponent(field: &SpectralField, rule: DealiasRule, band: (f64, f64)) -> Option<f64> {
    let (f, g) = (&field.coeffs, field.grid);
    let top = g.band_limit(rule) as f64;
    let (lo, hi) = (band.0 * top, band.1 * top);
    if lo < 1.0 {
        return None;
    }
    let shells = ((hi / lo).log2() * 4.0).ceil() as usize;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for sh in 0..shells {
        let a = lo * 2f64.powf(sh as f64 / 4.0);
        let b = (lo * 2f64.powf((sh + 1) as f64 / 4.0)).min(hi);
        let (mut pw, mut lw, mut cnt) = (0.0, 0.0, 0usize);
        for (i, z) in f.iter().enumerate() {
            let aj = g.mode(i).unsigned_abs() as f64;
            if aj >= a && aj < b {
                pw += z.norm_sqr();
                lw += japanese(g.freq(i)).ln();
                cnt += 1;
            }
        }
        if cnt > 0 && pw > 0.0 {
            xs.push(lw / cnt as f64);
            ys.push(0.5 * (pw / cnt as f64).ln());
        }
    }
    if xs.len() < 4 {
        return None;
    }
    linear_fit(&xs, &ys).map(|l| -l.slope)
}
