use super::transform::{fft_in_place, to_physical, Direction};
use super::{japanese, SpectralError, SpectralField};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `(sum <xi>^{2 sigma} |c|^2 dxi / (2 pi))^{1/2}`; at `sigma = 0` this is the physical L2 norm.
pub fn sobolev_norm(f: &SpectralField, sigma: f64) -> f64 {
    let g = f.grid;
    let mut acc = 0.0;
    for (i, c) in f.coeffs.iter().enumerate() {
        let w = japanese(g.freq(i)).powf(2.0 * sigma);
        acc += w * c.norm_sqr();
    }
    (acc * g.conv_measure()).sqrt()
}

/// `(sum |u_m|^2 dx)^{1/2}` from physical samples.
pub fn l2_physical(f: &SpectralField) -> f64 {
    let u = to_physical(f);
    (u.iter().map(|z| z.norm_sqr()).sum::<f64>() * f.grid.dx()).sqrt()
}

/// Linear propagator whose dispersion curve weights the modulation variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dispersion {
    /// `tau = -xi^2`, weight `<tau + xi^2>`
    Schrodinger,
    /// `tau = xi^3`, weight `<tau - xi^3>`
    Airy,
}

impl Dispersion {
    /// Symbol `phi` with `F u(t) = e^{i t phi(xi)} profile(t)`.
    pub fn symbol(self, xi: f64) -> f64 {
        match self {
            Dispersion::Schrodinger => -xi * xi,
            Dispersion::Airy => xi * xi * xi,
        }
    }
}

/// Smooth time window vanishing at both ends of the record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Taper {
    /// `exp(1 - 1/(1 - x^2))` on `x in (-1, 1)`, compactly supported and C-infinity
    #[default]
    Bump,
    /// `sin^2`
    Hann,
}

impl Taper {
    /// Weight at relative position `r in [0, 1]` of the window.
    pub fn weight(self, r: f64) -> f64 {
        match self {
            Taper::Bump => {
                let x = 2.0 * r - 1.0;
                if x.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - x * x)).exp()
                }
            }
            Taper::Hann => {
                if !(0.0..=1.0).contains(&r) {
                    0.0
                } else {
                    (PI * r).sin().powi(2)
                }
            }
        }
    }
}

fn check_times(times: &[f64], n_fields: usize) -> Result<f64, SpectralError> {
    if times.len() < 8 || n_fields < 8 {
        return Err(SpectralError::TooFewSamples(times.len().min(n_fields)));
    }
    if times.len() != n_fields {
        return Err(SpectralError::LengthMismatch { expected: times.len(), got: n_fields });
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(SpectralError::NonUniformTimes);
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(SpectralError::NonUniformTimes);
        }
    }
    Ok(dt)
}

fn taper_weights(n: usize, taper: Taper) -> Vec<f64> {
    (0..n).map(|m| taper.weight(m as f64 / (n - 1) as f64)).collect()
}

/// Discrete restriction norm of a sampled evolution given by its profiles.
///
/// The profiles are turned into physical-frame spectra, tapered in time, transformed
/// in `t` with `U(tau) = dt sum_m w_m f_m e^{-i tau t_m}`, and summed against
/// `<tau - phi(xi)>^{2b} <xi>^{2 sigma}` with measure `dtau dxi / (2 pi)^2`.
pub fn bourgain_norm(
    times: &[f64],
    profiles: &[SpectralField],
    sigma: f64,
    b: f64,
    phase: Dispersion,
    taper: Taper,
) -> Result<f64, SpectralError> {
    let dt = check_times(times, profiles.len())?;
    let grid = profiles[0].grid;
    if profiles.iter().any(|p| p.grid != grid) {
        return Err(SpectralError::GridMismatch);
    }
    let nt = times.len();
    let w = taper_weights(nt, taper);
    let dtau = 2.0 * PI / (nt as f64 * dt);
    let mut total = 0.0;
    let mut series = vec![Complex64::new(0.0, 0.0); nt];
    for i in 0..grid.n_points {
        let xi = grid.freq(i);
        let phi = phase.symbol(xi);
        let mut any = false;
        for m in 0..nt {
            let c = profiles[m].coeffs[i];
            any |= c.re != 0.0 || c.im != 0.0;
            // physical frame at absolute time; the clock origin only rotates U(tau)
            series[m] = c * Complex64::from_polar(w[m] * dt, phi * times[m]);
        }
        if !any {
            continue;
        }
        fft_in_place(&mut series, Direction::Forward);
        let space = japanese(xi).powf(2.0 * sigma);
        let mut acc = 0.0;
        for (q, u) in series.iter().enumerate() {
            let mq = if q < nt.div_ceil(2) { q as f64 } else { q as f64 - nt as f64 };
            let tau = mq * dtau;
            acc += japanese(tau - phi).powf(2.0 * b) * u.norm_sqr();
        }
        total += space * acc;
    }
    Ok((total * dtau / (2.0 * PI) * grid.conv_measure()).sqrt())
}

/// `(dt sum_m w_m^2 ||f_m||_{H^sigma}^2)^{1/2}`, the value [`bourgain_norm`] takes at `b = 0`.
pub fn tapered_sobolev_norm(
    times: &[f64],
    profiles: &[SpectralField],
    sigma: f64,
    taper: Taper,
) -> Result<f64, SpectralError> {
    let dt = check_times(times, profiles.len())?;
    let w = taper_weights(times.len(), taper);
    let acc: f64 = profiles.iter().zip(&w).map(|(p, wm)| wm * wm * sobolev_norm(p, sigma).powi(2)).sum();
    Ok((acc * dt).sqrt())
}

#[cfg(test)]
mod tests {
    use super::super::{FieldKind, Grid};
    use super::*;

    #[test]
    fn sobolev_single_mode_and_zero() {
        let g = Grid::new(16, 4.0).unwrap();
        let z = SpectralField::zeros(g, FieldKind::ULike);
        assert_eq!(sobolev_norm(&z, 3.0), 0.0);
        let mut f = z.clone();
        // unit L2 mass: |c|^2 / L = 1
        f.coeffs[0] = Complex64::new(2.0, 0.0);
        for s in [-2.0, 0.0, 1.5, 4.0] {
            assert!((sobolev_norm(&f, s) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn parseval() {
        let g = Grid::new(128, 9.0).unwrap();
        let f = SpectralField::from_fn(g, FieldKind::ULike, |x| Complex64::new((-x * x).exp(), 0.3 * x.sin()));
        let a = sobolev_norm(&f, 0.0);
        let b = l2_physical(&f);
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn indicator_block_scaling() {
        // 1_{[N-1, N+1]} has H^s norm ~ sqrt(2) N^s / sqrt(2 pi)
        let g = Grid::new(1 << 14, 200.0).unwrap();
        let n0 = 150.0;
        let s = 1.5;
        let f = SpectralField::from_fn(g, FieldKind::ULike, |x| {
            if (x - n0).abs() <= 1.0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let pred = 2f64.sqrt() * n0.powf(s) / (2.0 * PI).sqrt();
        assert!((sobolev_norm(&f, s) / pred - 1.0).abs() < 0.02);
    }

    #[test]
    fn bourgain_needs_samples() {
        let g = Grid::new(8, 1.0).unwrap();
        let f = vec![SpectralField::zeros(g, FieldKind::ULike); 4];
        let t: Vec<f64> = (0..4).map(|i| i as f64).collect();
        assert!(matches!(
            bourgain_norm(&t, &f, 0.0, 0.5, Dispersion::Schrodinger, Taper::Bump),
            Err(SpectralError::TooFewSamples(4))
        ));
    }
}
