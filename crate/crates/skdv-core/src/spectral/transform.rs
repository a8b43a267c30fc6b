use super::{FieldKind, Grid, SpectralError, SpectralField};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

// rustfft plans are Send + Sync; the planner itself is shared behind a lock.
fn plan(n: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    let planner = PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()));
    let mut p = planner.lock().unwrap_or_else(|e| e.into_inner());
    match dir {
        Direction::Forward => p.plan_fft_forward(n),
        Direction::Inverse => p.plan_fft_inverse(n),
    }
}

/// Unscaled in-place DFT, `sum_m x_m e^{-+2 pi i j m / n}`.
pub fn fft_in_place(buf: &mut [Complex64], dir: Direction) {
    if buf.len() <= 1 {
        return;
    }
    plan(buf.len(), dir).process(buf);
}

/// Physical samples on `grid.xs()` to lattice coefficients.
pub fn to_spectral(values: &[Complex64], grid: Grid, kind: FieldKind) -> Result<SpectralField, SpectralError> {
    if values.len() != grid.n_points {
        return Err(SpectralError::LengthMismatch { expected: grid.n_points, got: values.len() });
    }
    let mut buf = values.to_vec();
    fft_in_place(&mut buf, Direction::Forward);
    let dx = grid.dx();
    // x_0 = -L/2 contributes e^{i xi_j L/2} = (-1)^j
    for (i, c) in buf.iter_mut().enumerate() {
        let sign = if grid.mode(i).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        *c *= dx * sign;
    }
    let mut f = SpectralField { grid, coeffs: buf, kind };
    if kind == FieldKind::VLike {
        f.symmetrize();
    }
    Ok(f)
}

/// Lattice coefficients back to physical samples.
pub fn to_physical(f: &SpectralField) -> Vec<Complex64> {
    let grid = f.grid;
    let scale = grid.conv_measure();
    let mut buf: Vec<Complex64> = f
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let sign = if grid.mode(i).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            c * (scale * sign)
        })
        .collect();
    fft_in_place(&mut buf, Direction::Inverse);
    buf
}
