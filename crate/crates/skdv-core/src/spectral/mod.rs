//! Torus grids, spectral fields and the transforms between physical and frequency space.
//!
//! Conventions: the torus `[-L/2, L/2)` carries `n` equispaced points, the lattice is
//! `xi_j = 2 pi j / L` for `j` in `[-n/2, n/2)`. The forward transform carries `dx`, the
//! inverse carries `dxi / (2 pi) = 1 / L`, so lattice sums approximate the line integrals
//! `F u(xi) = int e^{-i x xi} u(x) dx`. Coefficients are stored in FFT order
//! (`j = 0, 1, .., n/2-1, -n/2, .., -1`).

mod io;
mod norms;
mod random;
mod transform;

pub use io::{field_from_binary, field_from_json, field_to_binary, field_to_json, FieldRecord};
pub use norms::{bourgain_norm, l2_physical, sobolev_norm, tapered_sobolev_norm, Dispersion, Taper};
pub use random::random_sobolev_data;
pub use transform::{fft_in_place, to_physical, to_spectral, Direction};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("n_points = {0} is not a power of two (>= 2)")]
    NotPowerOfTwo(usize),
    #[error("length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("array length {got} does not match n_points {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("bourgain norm needs at least 8 time samples, got {0}")]
    TooFewSamples(usize),
    #[error("time samples are not uniformly spaced")]
    NonUniformTimes,
    #[error("malformed field record: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n_points: usize,
    pub length: f64,
}

impl Grid {
    pub fn new(n_points: usize, length: f64) -> Result<Self, SpectralError> {
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(SpectralError::NotPowerOfTwo(n_points));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(SpectralError::BadLength(length));
        }
        Ok(Grid { n_points, length })
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n_points as f64
    }

    /// Lattice spacing `2 pi / L`.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Measure of one lattice cell in a convolution, `dxi / (2 pi) = 1 / L`.
    pub fn conv_measure(&self) -> f64 {
        1.0 / self.length
    }

    /// Integer lattice label of storage slot `i`.
    pub fn mode(&self, i: usize) -> i64 {
        let n = self.n_points as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Storage slot of lattice label `j`, wrapping modulo `n`.
    pub fn slot(&self, j: i64) -> usize {
        j.rem_euclid(self.n_points as i64) as usize
    }

    pub fn freq(&self, i: usize) -> f64 {
        self.mode(i) as f64 * self.dxi()
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.freq(i)).collect()
    }

    pub fn x(&self, m: usize) -> f64 {
        -0.5 * self.length + m as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n_points).map(|m| self.x(m)).collect()
    }

    /// Largest retained |j| under the given rule.
    pub fn band_limit(&self, rule: DealiasRule) -> i64 {
        let n = self.n_points as i64;
        match rule {
            DealiasRule::None => n / 2,
            DealiasRule::TwoThirds => (n - 1) / 3,
            DealiasRule::Half => (n - 1) / 4,
        }
    }

    pub fn in_band(&self, i: usize, rule: DealiasRule) -> bool {
        let j = self.mode(i);
        match rule {
            DealiasRule::None => true,
            _ => j.abs() <= self.band_limit(rule),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// complex valued in physical space
    ULike,
    /// real valued in physical space
    VLike,
}

/// Retained band for products. `TwoThirds` keeps `3|j| < n` so quadratic products do
/// not alias; `Half` keeps `4|j| < n`, which also protects the cubic term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DealiasRule {
    None,
    #[default]
    TwoThirds,
    Half,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    pub grid: Grid,
    pub coeffs: Vec<Complex64>,
    pub kind: FieldKind,
}

impl SpectralField {
    pub fn zeros(grid: Grid, kind: FieldKind) -> Self {
        SpectralField { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.n_points], kind }
    }

    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>, kind: FieldKind) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.n_points {
            return Err(SpectralError::LengthMismatch { expected: grid.n_points, got: coeffs.len() });
        }
        let mut f = SpectralField { grid, coeffs, kind };
        if kind == FieldKind::VLike {
            f.symmetrize();
        }
        Ok(f)
    }

    /// Build from a function of the lattice frequency.
    pub fn from_fn(grid: Grid, kind: FieldKind, f: impl Fn(f64) -> Complex64) -> Self {
        let coeffs = (0..grid.n_points).map(|i| f(grid.freq(i))).collect();
        let mut out = SpectralField { grid, coeffs, kind };
        if kind == FieldKind::VLike {
            out.symmetrize();
        }
        out
    }

    /// Project onto Hermitian-symmetric coefficients, `c(-xi) = conj c(xi)`, Nyquist real.
    pub fn symmetrize(&mut self) {
        let n = self.grid.n_points;
        let c = &mut self.coeffs;
        c[0].im = 0.0;
        c[n / 2].im = 0.0;
        for i in 1..n / 2 {
            let a = c[i];
            let b = c[n - i].conj();
            let m = (a + b) * 0.5;
            c[i] = m;
            c[n - i] = m.conj();
        }
    }

    /// Largest violation of the Hermitian symmetry, relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n_points;
        let c = &self.coeffs;
        let scale = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut d = c[0].im.abs().max(c[n / 2].im.abs());
        for i in 1..n / 2 {
            d = d.max((c[i] - c[n - i].conj()).norm());
        }
        d / scale
    }

    /// Zero every coefficient outside the 2/3 band.
    pub fn dealias(&self) -> SpectralField {
        self.dealias_with(DealiasRule::TwoThirds)
    }

    pub fn dealias_with(&self, rule: DealiasRule) -> SpectralField {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            if !self.grid.in_band(i, rule) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// Coefficients reordered from `j = -n/2` up to `j = n/2 - 1`.
    pub fn lattice_order(&self) -> Vec<Complex64> {
        let n = self.grid.n_points;
        (0..n).map(|p| self.coeffs[self.grid.slot(p as i64 - (n / 2) as i64)]).collect()
    }

    /// Largest absolute coefficient difference between two fields on one grid.
    pub fn max_abs_diff(&self, other: &SpectralField) -> Result<f64, SpectralError> {
        if self.grid != other.grid {
            return Err(SpectralError::GridMismatch);
        }
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }
}

/// Standalone 2/3-rule dealiasing.
pub fn dealias(f: &SpectralField) -> SpectralField {
    f.dealias()
}

/// `<xi> = (1 + xi^2)^{1/2}`.
#[inline]
pub fn japanese(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}

/// Regularity indices. `eta_plus` stands in for every "0+" exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    pub k: f64,
    pub s: f64,
    pub b: f64,
    pub b_prime: f64,
    pub eps: f64,
    pub eta_plus: f64,
}

impl Default for Regularity {
    fn default() -> Self {
        Regularity { k: 1.0, s: 1.0, b: 0.51, b_prime: -0.49, eps: 0.0, eta_plus: 0.01 }
    }
}

impl Regularity {
    pub fn new(k: f64, s: f64, eps: f64) -> Self {
        Regularity { k, s, eps, ..Default::default() }
    }

    /// Checks `b in (1/2, 3/5]`, `b' in [b-1, -2/5]`, `eps >= 0`, `eta_plus > 0`.
    ///
    /// The lower end for `b'` is closed: the default pair `(0.51, -0.49)` sits exactly on it.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.b > 0.5 && self.b <= 0.6) {
            return Err(format!("b = {} outside (1/2, 3/5]", self.b));
        }
        if !(self.b_prime >= self.b - 1.0 - 1e-12 && self.b_prime <= -0.4) {
            return Err(format!("b_prime = {} outside [b-1, -2/5]", self.b_prime));
        }
        if !(self.eps >= 0.0) {
            return Err(format!("eps = {} must be >= 0", self.eps));
        }
        if !(self.eta_plus > 0.0) {
            return Err(format!("eta_plus = {} must be > 0", self.eta_plus));
        }
        Ok(())
    }
}
