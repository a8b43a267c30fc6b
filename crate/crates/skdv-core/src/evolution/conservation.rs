//! Mass, momentum and energy of the coupled system.
//!
//! With `i u_t + u_xx = a u v + b |u|^2 u` and `v_t + v_xxx + v v_x = g (|u|^2)_x`:
//!
//! ```text
//! M = int |u|^2
//! P = a int v^2 - 2 g Im int conj(u) u_x
//! E = g int |u_x|^2 + a g int v |u|^2 + (b g / 2) int |u|^4 + (a / 2) int v_x^2 - (a / 6) int v^3
//! ```
//!
//! `E` is the Hamiltonian for `u_t = -(i/g) dE/d(conj u)`, `v_t = (1/a) d/dx dE/dv`; the
//! band-limited system keeps that structure, so all three are exact invariants of the
//! semi-discrete flow.

use super::products::to_fine;
use super::{CouplingParams, RunRecord, SpectralState};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
}

pub fn mass(state: &SpectralState) -> f64 {
    let g = state.grid();
    state.u.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * g.conv_measure()
}

pub fn momentum(state: &SpectralState, p: &CouplingParams) -> f64 {
    functionals(state, p).momentum
}

pub fn energy(state: &SpectralState, p: &CouplingParams) -> f64 {
    functionals(state, p).energy
}

/// Building blocks, each an exact lattice integral:
/// `[int |u|^2, Im int conj(u) u_x, int v^2, int |u_x|^2, int v |u|^2, int |u|^4, int v_x^2, int v^3]`.
pub fn basis_integrals(state: &SpectralState) -> [f64; 8] {
    let g = state.grid();
    let c = g.conv_measure();
    let (u, v) = state.physical_spectra();
    let mut m = [0.0; 8];
    for i in 0..g.n_points {
        let xi = g.freq(i);
        let a = u.coeffs[i].norm_sqr();
        let b = v.coeffs[i].norm_sqr();
        m[0] += a;
        m[1] += xi * a;
        m[2] += b;
        m[3] += xi * xi * a;
        m[6] += xi * xi * b;
    }
    for k in [0, 1, 2, 3, 6] {
        m[k] *= c;
    }
    // the doubled grid integrates quartic products of band-limited fields exactly
    let uf = to_fine(&u.coeffs, g);
    let vf = to_fine(&v.coeffs, g);
    let dx = g.length / uf.len() as f64;
    for (a, b) in uf.iter().zip(&vf) {
        let uu = a.norm_sqr();
        m[4] += b.re * uu;
        m[5] += uu * uu;
        m[7] += b.re * b.re * b.re;
    }
    m[4] *= dx;
    m[5] *= dx;
    m[7] *= dx;
    m
}

pub fn functionals(state: &SpectralState, p: &CouplingParams) -> Functionals {
    let m = basis_integrals(state);
    let (a, b, g) = (p.alpha, p.beta, p.gamma);
    Functionals {
        mass: m[0],
        momentum: a * m[2] - 2.0 * g * m[1],
        energy: g * m[3] + a * g * m[4] + 0.5 * b * g * m[5] + 0.5 * a * m[6] - a / 6.0 * m[7],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub momentum: Vec<f64>,
    pub energy: Vec<f64>,
    pub max_drift_mass: f64,
    pub max_drift_momentum: f64,
    pub max_drift_energy: f64,
}

/// Relative drift `max |F(t) - F(0)| / |F(0)|`; absolute when `F(0) = 0`.
fn drift(series: &[f64]) -> f64 {
    let Some(&f0) = series.first() else { return 0.0 };
    let d = series.iter().map(|f| (f - f0).abs()).fold(0.0, f64::max);
    if f0 != 0.0 {
        d / f0.abs()
    } else {
        d
    }
}

pub fn conservation_report(record: &RunRecord, p: &CouplingParams) -> ConservationReport {
    let f: Vec<Functionals> = record.states.iter().map(|s| functionals(s, p)).collect();
    let mass: Vec<f64> = f.iter().map(|x| x.mass).collect();
    let momentum: Vec<f64> = f.iter().map(|x| x.momentum).collect();
    let energy: Vec<f64> = f.iter().map(|x| x.energy).collect();
    ConservationReport {
        times: record.times.clone(),
        max_drift_mass: drift(&mass),
        max_drift_momentum: drift(&momentum),
        max_drift_energy: drift(&energy),
        mass,
        momentum,
        energy,
    }
}
