//! Classical and integrated-by-parts evolutions of the coupled system on profiles,
//! plus conservation and smoothing diagnostics.
//!
//! Profiles are `u~ = e^{i t xi^2} F u` and `v~ = e^{-i t xi^3} F v`. The physical-frame
//! spectra `F u`, `F v` are what products and norms are computed from.

mod conservation;
mod integrator;
mod operators;
mod products;
mod smoothing;

pub use conservation::{basis_integrals, conservation_report, energy, functionals, mass, momentum, ConservationReport, Functionals};
pub use integrator::{evolve, rhs_classical, step, Diagnostics, RunRecord};
pub use operators::{apply_b, apply_n, apply_n_direct, Branch, IbpOperators};
pub use products::{direct_convolution, Products};
pub use smoothing::{smoothing_probe, spectral_decay_exponent, SmoothingComponent, SmoothingFit, SmoothingQuery};

use crate::par::Parallelism;
use crate::resonance::{RegionParams, DEFAULT_GUARD};
use crate::spectral::{DealiasRule, FieldKind, Grid, SpectralError, SpectralField};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("non-finite value at t = {t}")]
    NonFinite { t: f64, record: Box<RunRecord> },
    #[error("blow-up at t = {t}: a Sobolev diagnostic exceeded 1e8 times its initial value")]
    BlowUp { t: f64, record: Box<RunRecord> },
    #[error("operator N{j} is not defined for the {branch:?} branch")]
    InvalidOperator { j: usize, branch: Branch },
}

/// Coefficients of `i u_t + u_xx = alpha u v + beta |u|^2 u`,
/// `v_t + v_xxx + kdv (v^2)_x / 2 = gamma (|u|^2)_x`.
///
/// `kdv` is 1 for the physical system; it is only switched off in test mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(default = "one")]
    pub kdv: f64,
    /// allows `alpha = 0` or `gamma = 0` and `kdv != 1`
    #[serde(default)]
    pub test_mode: bool,
}

fn one() -> f64 {
    1.0
}

impl Default for CouplingParams {
    fn default() -> Self {
        CouplingParams { alpha: 1.0, beta: 1.0, gamma: 1.0, kdv: 1.0, test_mode: false }
    }
}

impl CouplingParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        CouplingParams { alpha, beta, gamma, kdv: 1.0, test_mode: false }
    }

    /// Test mode with arbitrary coefficients.
    pub fn decoupled(alpha: f64, beta: f64, gamma: f64, kdv: f64) -> Self {
        CouplingParams { alpha, beta, gamma, kdv, test_mode: true }
    }

    /// Free linear flow: every nonlinear coefficient zero.
    pub fn linear() -> Self {
        Self::decoupled(0.0, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, x) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma), ("kdv", self.kdv)] {
            if !x.is_finite() {
                return Err(format!("{name} must be finite"));
            }
        }
        if !self.test_mode {
            if self.alpha == 0.0 {
                return Err("alpha must be nonzero outside test mode".into());
            }
            if self.gamma == 0.0 {
                return Err("gamma must be nonzero outside test mode".into());
            }
            if self.kdv != 1.0 {
                return Err("kdv must be 1 outside test mode".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EvolveMode {
    #[default]
    Classical,
    IbpU,
    IbpV,
}

impl EvolveMode {
    /// Regime of `k - s` this formulation is meant for.
    pub fn matches_regime(self, k_minus_s: f64) -> bool {
        match self {
            EvolveMode::Classical => k_minus_s > -1.0 && k_minus_s < 2.0,
            EvolveMode::IbpU => (2.0..3.0).contains(&k_minus_s),
            EvolveMode::IbpV => k_minus_s > -2.0 && k_minus_s <= -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    /// output step; internal substeps refine it when the stability bound demands
    pub dt: f64,
    pub t_end: f64,
    pub mode: EvolveMode,
    pub region_params: RegionParams,
    pub dealias_rule: DealiasRule,
    pub record_stride: usize,
    /// Sobolev index of the `u` diagnostic
    pub k: f64,
    /// Sobolev index of the `v` diagnostic
    pub s: f64,
    pub guard: f64,
    /// constant `C` in `dt <= C / (max|xi| max(|u|_inf, |v|_inf))`
    pub stability_c: f64,
    #[serde(skip)]
    pub parallelism: Parallelism,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            dt: 1e-3,
            t_end: 1.0,
            mode: EvolveMode::Classical,
            region_params: RegionParams::default(),
            dealias_rule: DealiasRule::TwoThirds,
            record_stride: 1,
            k: 1.0,
            s: 1.0,
            guard: DEFAULT_GUARD,
            stability_c: 1.0,
            parallelism: Parallelism::default(),
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(format!("t_end = {} must be positive", self.t_end));
        }
        if self.record_stride == 0 {
            return Err("record_stride must be positive".into());
        }
        if !(self.guard > 0.0) {
            return Err("guard must be positive".into());
        }
        if !(self.stability_c > 0.0) {
            return Err("stability_c must be positive".into());
        }
        self.region_params.validate()
    }
}

/// Profiles `(u~, v~)` at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralState {
    pub t: f64,
    pub u: SpectralField,
    pub v: SpectralField,
}

impl SpectralState {
    pub fn new(t: f64, u: SpectralField, v: SpectralField) -> Result<Self, SpectralError> {
        if u.grid != v.grid {
            return Err(SpectralError::GridMismatch);
        }
        Ok(SpectralState { t, u, v })
    }

    /// Profiles of physical-space data given at time `t` (for `t = 0` they are just the spectra).
    pub fn from_physical_spectra(t: f64, uhat: &SpectralField, vhat: &SpectralField) -> Result<Self, SpectralError> {
        if uhat.grid != vhat.grid {
            return Err(SpectralError::GridMismatch);
        }
        let g = uhat.grid;
        let mut u = uhat.clone();
        let mut v = vhat.clone();
        u.kind = FieldKind::ULike;
        v.kind = FieldKind::VLike;
        for i in 0..g.n_points {
            let xi = g.freq(i);
            u.coeffs[i] *= Complex64::from_polar(1.0, t * xi * xi);
            v.coeffs[i] *= Complex64::from_polar(1.0, -t * xi * xi * xi);
        }
        Ok(SpectralState { t, u, v })
    }

    pub fn grid(&self) -> Grid {
        self.u.grid
    }

    /// `(F u, F v)` at the state's own time.
    pub fn physical_spectra(&self) -> (SpectralField, SpectralField) {
        let g = self.grid();
        let mut u = self.u.clone();
        let mut v = self.v.clone();
        for i in 0..g.n_points {
            let xi = g.freq(i);
            u.coeffs[i] *= Complex64::from_polar(1.0, -self.t * xi * xi);
            v.coeffs[i] *= Complex64::from_polar(1.0, self.t * xi * xi * xi);
        }
        (u, v)
    }

    pub fn dealias(&self, rule: DealiasRule) -> SpectralState {
        SpectralState { t: self.t, u: self.u.dealias_with(rule), v: self.v.dealias_with(rule) }
    }

    pub fn is_dealiased(&self, rule: DealiasRule) -> bool {
        let g = self.grid();
        (0..g.n_points).all(|i| g.in_band(i, rule) || (self.u.coeffs[i].norm() == 0.0 && self.v.coeffs[i].norm() == 0.0))
    }

    /// `||u||_{H^k}` and `||v||_{H^s}` combined as `sqrt(a^2 + b^2)` against `other`.
    pub fn distance(&self, other: &SpectralState, k: f64, s: f64) -> Result<f64, SpectralError> {
        use crate::spectral::sobolev_norm;
        if self.grid() != other.grid() {
            return Err(SpectralError::GridMismatch);
        }
        let mut du = self.u.clone();
        let mut dv = self.v.clone();
        for i in 0..du.coeffs.len() {
            du.coeffs[i] -= other.u.coeffs[i];
            dv.coeffs[i] -= other.v.coeffs[i];
        }
        Ok(sobolev_norm(&du, k).hypot(sobolev_norm(&dv, s)))
    }
}
