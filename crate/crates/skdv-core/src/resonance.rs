//! Resonance polynomials, their compositions under substitution, and frequency regions.
//!
//! Every phase is evaluated at an output frequency `xi` and input frequencies with
//! `xi = sum(inputs)`. A conjugated slot (`u*(eta) = conj u(-eta)`) carries its
//! sign inside the polynomial, as in `xi^2 - xi1^2 + xi2^2 - xi3^2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResonanceError {
    #[error("{id:?} takes {expected} input frequencies, got {got}")]
    ArityMismatch { id: PhaseId, expected: usize, got: usize },
    #[error("no substitution of {inner:?} into slot {slot} of {outer:?}")]
    IllegalComposition { outer: PhaseId, inner: PhaseId, slot: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseId {
    PhiU1,
    PhiU2,
    PhiV1,
    PhiV2,
    PsiU1,
    PsiU2,
    PsiU3,
    PsiU4,
    PsiV1,
    PsiV2,
    PsiV3,
    PsiV4,
    NlsCubic,
}

impl PhaseId {
    pub const ALL: [PhaseId; 13] = [
        PhaseId::PhiU1,
        PhaseId::PhiU2,
        PhaseId::PhiV1,
        PhaseId::PhiV2,
        PhaseId::PsiU1,
        PhaseId::PsiU2,
        PhaseId::PsiU3,
        PhaseId::PsiU4,
        PhaseId::PsiV1,
        PhaseId::PsiV2,
        PhaseId::PsiV3,
        PhaseId::PsiV4,
        PhaseId::NlsCubic,
    ];

    pub fn arity(self) -> usize {
        use PhaseId::*;
        match self {
            PhiU1 | PhiV1 | PhiV2 => 2,
            PhiU2 | PsiU1 | PsiU3 | PsiU4 | PsiV1 | PsiV3 | NlsCubic => 3,
            PsiU2 | PsiV2 | PsiV4 => 4,
        }
    }

    /// Human-readable polynomial, inputs named in slot order.
    pub fn polynomial(self) -> &'static str {
        use PhaseId::*;
        match self {
            PhiU1 => "xi^2 - xi1^2 + xi2^3",
            PhiU2 => "xi^2 - xi1^2 + xi2^2 - xi3^2",
            PhiV1 => "-xi^3 - xi1^2 + xi2^2",
            PhiV2 => "-xi^3 + xi1^3 + xi2^3",
            PsiU1 => "xi^2 - xi11^2 + xi12^3 + xi2^3",
            PsiU2 => "xi^2 - xi11^2 + xi12^2 - xi13^2 + xi2^3",
            PsiU3 => "xi^2 - xi1^2 - xi21^2 + xi22^2",
            PsiU4 => "xi^2 - xi1^2 + xi21^3 + xi22^3",
            PsiV1 => "-xi^3 - xi11^2 + xi12^3 + xi2^2",
            PsiV2 => "-xi^3 - xi11^2 + xi12^2 - xi13^2 + xi2^2",
            PsiV3 => "-xi^3 - xi1^2 + xi21^2 + xi22^3",
            PsiV4 => "-xi^3 - xi1^2 + xi21^2 - xi22^2 + xi23^2",
            NlsCubic => "xi^2 - xi1^2 + xi2^2 - xi3^2",
        }
    }

    pub fn key(self) -> &'static str {
        use PhaseId::*;
        match self {
            PhiU1 => "PhiU1",
            PhiU2 => "PhiU2",
            PhiV1 => "PhiV1",
            PhiV2 => "PhiV2",
            PsiU1 => "PsiU1",
            PsiU2 => "PsiU2",
            PsiU3 => "PsiU3",
            PsiU4 => "PsiU4",
            PsiV1 => "PsiV1",
            PsiV2 => "PsiV2",
            PsiV3 => "PsiV3",
            PsiV4 => "PsiV4",
            NlsCubic => "NlsCubic",
        }
    }
}

/// Evaluate without arity checks. `x` holds the inputs in slot order.
#[inline]
pub fn phase_raw(id: PhaseId, xi: f64, x: &[f64]) -> f64 {
    use PhaseId::*;
    let sq = |a: f64| a * a;
    let cu = |a: f64| a * a * a;
    match id {
        PhiU1 => sq(xi) - sq(x[0]) + cu(x[1]),
        PhiU2 | NlsCubic => sq(xi) - sq(x[0]) + sq(x[1]) - sq(x[2]),
        PhiV1 => -cu(xi) - sq(x[0]) + sq(x[1]),
        PhiV2 => -cu(xi) + cu(x[0]) + cu(x[1]),
        PsiU1 => sq(xi) - sq(x[0]) + cu(x[1]) + cu(x[2]),
        PsiU2 => sq(xi) - sq(x[0]) + sq(x[1]) - sq(x[2]) + cu(x[3]),
        PsiU3 => sq(xi) - sq(x[0]) - sq(x[1]) + sq(x[2]),
        PsiU4 => sq(xi) - sq(x[0]) + cu(x[1]) + cu(x[2]),
        PsiV1 => -cu(xi) - sq(x[0]) + cu(x[1]) + sq(x[2]),
        PsiV2 => -cu(xi) - sq(x[0]) + sq(x[1]) - sq(x[2]) + sq(x[3]),
        PsiV3 => -cu(xi) - sq(x[0]) + sq(x[1]) + cu(x[2]),
        PsiV4 => -cu(xi) - sq(x[0]) + sq(x[1]) - sq(x[2]) + sq(x[3]),
    }
}

pub fn phase_value(id: PhaseId, out_freq: f64, in_freqs: &[f64]) -> Result<f64, ResonanceError> {
    if in_freqs.len() != id.arity() {
        return Err(ResonanceError::ArityMismatch { id, expected: id.arity(), got: in_freqs.len() });
    }
    Ok(phase_raw(id, out_freq, in_freqs))
}

/// `xi2 (xi1 + xi + xi2^2)` with `xi = xi1 + xi2`.
pub fn phi_u1_factored(xi1: f64, xi2: f64) -> f64 {
    let xi = xi1 + xi2;
    xi2 * (xi1 + xi + xi2 * xi2)
}

/// `-xi (xi^2 - xi2 + xi1)` with `xi = xi1 + xi2`.
pub fn phi_v1_factored(xi1: f64, xi2: f64) -> f64 {
    let xi = xi1 + xi2;
    -xi * (xi * xi - xi2 + xi1)
}

/// `-3 xi xi1 xi2`.
pub fn phi_v2_factored(xi1: f64, xi2: f64) -> f64 {
    -3.0 * (xi1 + xi2) * xi1 * xi2
}

/// `2 (xi - xi1)(xi - xi3)` with `xi = xi1 + xi2 + xi3`.
pub fn nls_cubic_factored(xi1: f64, xi2: f64, xi3: f64) -> f64 {
    let xi = xi1 + xi2 + xi3;
    2.0 * (xi - xi1) * (xi - xi3)
}

/// One legal substitution: time derivative of `inner` fed into `slot` (1-based) of `outer`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Composition {
    pub outer: PhaseId,
    pub inner: PhaseId,
    pub slot: usize,
    pub result: PhaseId,
    /// the slot holds a conjugated factor, so the inner phase enters as `-inner(-eta; -children)`
    pub conjugate: bool,
}

pub const COMPOSITIONS: [Composition; 8] = [
    Composition { outer: PhaseId::PhiU1, inner: PhaseId::PhiU1, slot: 1, result: PhaseId::PsiU1, conjugate: false },
    Composition { outer: PhaseId::PhiU1, inner: PhaseId::PhiU2, slot: 1, result: PhaseId::PsiU2, conjugate: false },
    Composition { outer: PhaseId::PhiU1, inner: PhaseId::PhiV1, slot: 2, result: PhaseId::PsiU3, conjugate: false },
    Composition { outer: PhaseId::PhiU1, inner: PhaseId::PhiV2, slot: 2, result: PhaseId::PsiU4, conjugate: false },
    Composition { outer: PhaseId::PhiV1, inner: PhaseId::PhiU1, slot: 1, result: PhaseId::PsiV1, conjugate: false },
    Composition { outer: PhaseId::PhiV1, inner: PhaseId::PhiU2, slot: 1, result: PhaseId::PsiV2, conjugate: false },
    Composition { outer: PhaseId::PhiV1, inner: PhaseId::PhiU1, slot: 2, result: PhaseId::PsiV3, conjugate: true },
    Composition { outer: PhaseId::PhiV1, inner: PhaseId::PhiU2, slot: 2, result: PhaseId::PsiV4, conjugate: true },
];

pub fn lookup_composition(outer: PhaseId, inner: PhaseId, slot: usize) -> Result<Composition, ResonanceError> {
    COMPOSITIONS
        .iter()
        .copied()
        .find(|c| c.outer == outer && c.inner == inner && c.slot == slot)
        .ok_or(ResonanceError::IllegalComposition { outer, inner, slot })
}

/// Largest relative mismatch of `result = outer + inner` at the given children and the
/// untouched outer input. `children` are the inner inputs, `other` the remaining outer input.
pub fn composition_defect(c: &Composition, children: &[f64], other: f64) -> f64 {
    let parent: f64 = children.iter().sum();
    let mut outer_in = [0.0; 2];
    outer_in[c.slot - 1] = parent;
    outer_in[2 - c.slot] = other;
    let xi = parent + other;
    let outer = phase_raw(c.outer, xi, &outer_in);
    let inner = if c.conjugate {
        let neg: Vec<f64> = children.iter().map(|x| -x).collect();
        -phase_raw(c.inner, -parent, &neg)
    } else {
        phase_raw(c.inner, parent, children)
    };
    let mut flat = Vec::with_capacity(4);
    if c.slot == 1 {
        flat.extend_from_slice(children);
        flat.push(other);
    } else {
        flat.push(other);
        flat.extend_from_slice(children);
    }
    let psi = phase_raw(c.result, xi, &flat);
    let scale = psi.abs().max(outer.abs()).max(inner.abs()).max(1.0);
    (psi - outer - inner).abs() / scale
}

/// True iff the composition identity holds to `1e-9` relative on `samples` random tuples.
pub fn phase_composition_check(
    outer: PhaseId,
    inner: PhaseId,
    slot: usize,
    samples: usize,
    seed: u64,
) -> Result<bool, ResonanceError> {
    use rand::{Rng, SeedableRng};
    let c = lookup_composition(outer, inner, slot)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let m = c.inner.arity();
    let mut children = vec![0.0; m];
    for _ in 0..samples {
        let scale = 10f64.powf(rng.random_range(-1.0..3.0));
        for ch in children.iter_mut() {
            *ch = rng.random_range(-1.0..1.0) * scale;
        }
        let other = rng.random_range(-1.0..1.0) * scale;
        if composition_defect(&c, &children, other) > 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    pub delta_u: f64,
    pub delta_v: f64,
}

impl Default for RegionParams {
    fn default() -> Self {
        RegionParams { delta_u: 0.05, delta_v: 0.05 }
    }
}

impl RegionParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.delta_u > 0.0 && self.delta_u.is_finite()) {
            return Err(format!("delta_u = {} must be positive", self.delta_u));
        }
        if !(self.delta_v > 0.0 && self.delta_v.is_finite()) {
            return Err(format!("delta_v = {} must be positive", self.delta_v));
        }
        Ok(())
    }
}

/// Factor behind every "much smaller" and "comparable" in the region definitions.
pub const SEPARATION: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionId {
    U,
    UComplement,
    V,
    VComplement,
    N5Low,
    N5High,
}

/// Region membership of the first input frequency `xi1` for output `xi`; `xi2 = xi - xi1`.
pub fn in_region(region: RegionId, xi: f64, xi1: f64, p: &RegionParams) -> bool {
    let (a, a1) = (xi.abs(), xi1.abs());
    let a2 = (xi - xi1).abs();
    match region {
        RegionId::U => SEPARATION * a1 < a && a > 1.0 / p.delta_u,
        RegionId::UComplement => !in_region(RegionId::U, xi, xi1, p),
        RegionId::V => 1.0 / p.delta_v < a1 && a1 < SEPARATION * a,
        RegionId::VComplement => !in_region(RegionId::V, xi, xi1, p),
        RegionId::N5Low => SEPARATION * a2 < a && a1 * SEPARATION >= a && a1 <= SEPARATION * a,
        RegionId::N5High => a1 * SEPARATION >= a2 && a2 * SEPARATION >= a,
    }
}

/// Shared counter of guarded (near-resonant) evaluations.
#[derive(Debug, Default)]
pub struct GuardStats {
    hits: AtomicU64,
}

impl GuardStats {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn hit(&self) {
        self.hits.fetch_add(1, Ordering::Relaxed);
    }
    pub fn count(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }
}

pub const DEFAULT_GUARD: f64 = 1e-8;

/// `1 / (i Phi)`, or zero (counted) when `|Phi| < guard`.
pub fn inverse_phase(
    id: PhaseId,
    out_freq: f64,
    in_freqs: &[f64],
    guard: f64,
    stats: &GuardStats,
) -> Result<Complex64, ResonanceError> {
    let phi = phase_value(id, out_freq, in_freqs)?;
    Ok(inverse_of(phi, guard, stats))
}

/// Time integral `int_0^t e^{i s Phi} ds = (e^{i t Phi} - 1) / (i Phi)`.
///
/// Written as `t (sin x / x + 2 i sin^2(x/2) / x)` with `x = t Phi`, which has no
/// cancellation for small `x`. Equals `t` at `Phi = 0`.
pub fn duhamel_kernel(phi: f64, t: f64) -> Complex64 {
    let x = t * phi;
    if x == 0.0 {
        return Complex64::new(t, 0.0);
    }
    let h = (0.5 * x).sin();
    Complex64::new(t * x.sin() / x, t * 2.0 * h * h / x)
}

#[inline]
pub fn inverse_of(phi: f64, guard: f64, stats: &GuardStats) -> Complex64 {
    if phi.abs() < guard {
        stats.hit();
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, -1.0 / phi)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseCatalogEntry {
    pub id: &'static str,
    pub arity: usize,
    pub polynomial: &'static str,
    /// `(inner, slot, result)` substitutions with this phase as the outer one
    pub compositions: Vec<(String, usize, String)>,
}

pub fn phase_catalog() -> Vec<PhaseCatalogEntry> {
    PhaseId::ALL
        .iter()
        .map(|&id| PhaseCatalogEntry {
            id: id.key(),
            arity: id.arity(),
            polynomial: id.polynomial(),
            compositions: COMPOSITIONS
                .iter()
                .filter(|c| c.outer == id)
                .map(|c| (c.inner.key().to_string(), c.slot, c.result.key().to_string()))
                .collect(),
        })
        .collect()
}
