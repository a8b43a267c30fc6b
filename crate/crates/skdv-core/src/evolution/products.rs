//! Exact lattice products of band-limited spectra through a doubled grid.

use crate::spectral::{fft_in_place, DealiasRule, Direction, Grid};
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Spectra (physical frame, FFT order, truncated to the band) of the products entering the system.
#[derive(Debug, Clone)]
pub struct Products {
    /// `F(u v)`
    pub uv: Vec<Complex64>,
    /// `F(|u|^2)`
    pub uu: Vec<Complex64>,
    /// `F(|u|^2 u)`
    pub uuu: Vec<Complex64>,
    /// `F(v^2)`
    pub vv: Vec<Complex64>,
}

fn sign(j: i64) -> f64 {
    if j.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Samples on the doubled grid of a band-limited spectrum.
pub(crate) fn to_fine(coeffs: &[Complex64], grid: Grid) -> Vec<Complex64> {
    let n = grid.n_points;
    let big = Grid { n_points: 2 * n, length: grid.length };
    let mut buf = vec![ZERO; 2 * n];
    let scale = grid.conv_measure();
    for (i, c) in coeffs.iter().enumerate() {
        let j = grid.mode(i);
        // the -n/2 mode is never in a dealiased band
        if j == -((n / 2) as i64) {
            continue;
        }
        buf[big.slot(j)] = c * (scale * sign(j));
    }
    fft_in_place(&mut buf, Direction::Inverse);
    buf
}

/// Spectrum on `grid` (band only) of samples on the doubled grid.
fn from_fine(mut buf: Vec<Complex64>, grid: Grid, rule: DealiasRule) -> Vec<Complex64> {
    let n = grid.n_points;
    let big = Grid { n_points: 2 * n, length: grid.length };
    fft_in_place(&mut buf, Direction::Forward);
    let dx = big.dx();
    let mut out = vec![ZERO; n];
    for (i, o) in out.iter_mut().enumerate() {
        if grid.in_band(i, rule) && grid.mode(i) != -((n / 2) as i64) {
            let j = grid.mode(i);
            *o = buf[big.slot(j)] * (dx * sign(j));
        }
    }
    out
}

impl Products {
    /// All four products from band-limited `F u`, `F v`.
    ///
    /// Inputs supported in `|j| <= K` with `3K < n` make every product alias-free on the
    /// doubled grid, so the results are the exact convolutions `(1/L) sum` (cubic: `1/L^2`).
    pub fn compute(uhat: &[Complex64], vhat: &[Complex64], grid: Grid, rule: DealiasRule) -> Products {
        let u = to_fine(uhat, grid);
        let v = to_fine(vhat, grid);
        let mut uv = Vec::with_capacity(u.len());
        let mut uu = Vec::with_capacity(u.len());
        let mut uuu = Vec::with_capacity(u.len());
        let mut vv = Vec::with_capacity(u.len());
        for (a, b) in u.iter().zip(&v) {
            let m = a.norm_sqr();
            uv.push(a * b);
            uu.push(Complex64::new(m, 0.0));
            uuu.push(a * m);
            vv.push(b * b);
        }
        Products {
            uv: from_fine(uv, grid, rule),
            uu: from_fine(uu, grid, rule),
            uuu: from_fine(uuu, grid, rule),
            vv: from_fine(vv, grid, rule),
        }
    }

    /// Only `F(|u|^2)` and `F(|u|^2 u)`, for evaluations that never touch `v`.
    pub fn compute_u_only(uhat: &[Complex64], grid: Grid, rule: DealiasRule) -> (Vec<Complex64>, Vec<Complex64>) {
        let u = to_fine(uhat, grid);
        let uu: Vec<Complex64> = u.iter().map(|a| Complex64::new(a.norm_sqr(), 0.0)).collect();
        let uuu: Vec<Complex64> = u.iter().map(|a| a * a.norm_sqr()).collect();
        (from_fine(uu, grid, rule), from_fine(uuu, grid, rule))
    }
}

/// `(1/L) sum_{xi1} a(xi1) b(xi - xi1)` over the lattice, kept on the band of `rule`.
///
/// Direct O(n^2) summation; the inputs are read on the band only, the `-n/2` mode excluded.
pub fn direct_convolution(a: &[Complex64], b: &[Complex64], grid: Grid, rule: DealiasRule) -> Vec<Complex64> {
    let n = grid.n_points;
    let half = (n / 2) as i64;
    let band: Vec<usize> = (0..n).filter(|&i| grid.in_band(i, rule) && grid.mode(i) != -half).collect();
    let mut out = vec![ZERO; n];
    for &o in &band {
        let j = grid.mode(o);
        let mut acc = ZERO;
        for &i1 in &band {
            let j2 = j - grid.mode(i1);
            if j2.abs() >= half {
                continue;
            }
            let i2 = grid.slot(j2);
            if !grid.in_band(i2, rule) {
                continue;
            }
            acc += a[i1] * b[i2];
        }
        out[o] = acc * grid.conv_measure();
    }
    out
}
