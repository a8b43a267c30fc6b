use super::{japanese, FieldKind, Grid, SpectralField};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Random field with `c(xi) = g_xi <xi>^{-sigma - 1/2 - eta_plus}`, `g` standard complex Gaussian.
///
/// Draws run over the lattice from `j = -n/2` upwards, so the output only depends on
/// `(grid, sigma, eta_plus, seed, kind)`. For `VLike` the negative half is the mirror
/// of the positive half and the zero and Nyquist modes are real.
pub fn random_sobolev_data(grid: Grid, sigma: f64, eta_plus: f64, seed: u64, kind: FieldKind) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n_points as i64;
    let mut out = SpectralField::zeros(grid, kind);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
    for j in -n / 2..n / 2 {
        let i = grid.slot(j);
        let decay = japanese(grid.freq(i)).powf(-sigma - 0.5 - eta_plus);
        let g = match kind {
            FieldKind::ULike => Complex64::new(gauss() * h, gauss() * h),
            FieldKind::VLike if j == 0 || j == -n / 2 => Complex64::new(gauss(), 0.0),
            FieldKind::VLike if j > 0 => Complex64::new(gauss() * h, gauss() * h),
            FieldKind::VLike => continue,
        };
        out.coeffs[i] = g * decay;
    }
    if kind == FieldKind::VLike {
        for j in 1..n / 2 {
            out.coeffs[grid.slot(-j)] = out.coeffs[grid.slot(j)].conj();
        }
    }
    out
}
