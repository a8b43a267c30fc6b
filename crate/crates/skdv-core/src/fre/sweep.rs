//! Scaling fits over `(alpha, M)` grids and growth checks over cutoffs.

use serde::Serialize;

use crate::fit::plane_fit;

use super::catalog::jp;
use super::engine::{evaluate_fre, FreQuery, FreResult};
use super::FreError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub m: f64,
    /// Larger of the values at `+alpha` and `-alpha`.
    pub value: f64,
    pub flagged: bool,
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    /// Fitted exponent of `M`.
    pub exponent_m: f64,
    /// Fitted exponent of `<alpha>`.
    pub exponent_alpha: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<SweepPoint>,
    pub excluded: usize,
}

fn distinct(v: &[f64]) -> usize {
    let mut w = v.to_vec();
    w.sort_by(f64::total_cmp);
    w.dedup();
    w.len()
}

fn both_signs(template: &FreQuery, alpha: f64, m: f64) -> Result<FreResult, FreError> {
    let plus = evaluate_fre(&template.clone().at(alpha, m))?;
    if alpha == 0.0 {
        return Ok(plus);
    }
    let minus = evaluate_fre(&template.clone().at(-alpha, m))?;
    Ok(if minus.value > plus.value { minus } else { plus })
}

/// Fit `log value = e_M log M + e_alpha log <alpha> + c` over the grid.
///
/// Only pairs with `M <= |alpha|` enter, the sign of `alpha` is maximised over, and flagged
/// points are dropped. More than 30% flagged refuses the fit.
pub fn sweep_and_fit(template: &FreQuery, alphas: &[f64], ms: &[f64]) -> Result<ScalingFit, FreError> {
    for axis in [alphas, ms] {
        let got = distinct(axis);
        if got < 6 {
            return Err(FreError::TooFewPoints { needed: 6, got });
        }
    }
    let pairs: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| ms.iter().map(move |&m| (a.abs(), m)))
        .filter(|(a, m)| *m <= *a)
        .collect();
    let mut points = Vec::with_capacity(pairs.len());
    for (a, m) in pairs {
        let r = both_signs(template, a, m)?;
        points.push(SweepPoint { alpha: a, m, value: r.value, flagged: r.flagged(), boundary: r.boundary });
    }
    let total = points.len();
    let excluded = points.iter().filter(|p| p.flagged).count();
    if total == 0 || excluded * 10 > total * 3 {
        return Err(FreError::FitRefused { excluded, total });
    }
    let used: Vec<&SweepPoint> = points.iter().filter(|p| !p.flagged && p.value > 0.0).collect();
    let la: Vec<f64> = used.iter().map(|p| p.m.ln()).collect();
    let lb: Vec<f64> = used.iter().map(|p| jp(p.alpha).ln()).collect();
    let lz: Vec<f64> = used.iter().map(|p| p.value.ln()).collect();
    let fit = plane_fit(&la, &lb, &lz).ok_or(FreError::TooFewPoints { needed: 3, got: used.len() })?;
    Ok(ScalingFit {
        exponent_m: fit.coef_a,
        exponent_alpha: fit.coef_b,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        points,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub cutoffs: Vec<f64>,
    /// `max value / (<alpha> M)` over the admissible dyadic `alpha` at each cutoff.
    pub constants: Vec<f64>,
    pub diverging: bool,
}

/// Growth of the best constant in `value <= C <alpha> M` as the cutoff grows.
///
/// At cutoff `X` the admissible moduli are the dyadic `2^6 <= alpha <= (X/10)^2`, so a
/// larger lattice also reaches larger `alpha`. Diverging means every step multiplies the
/// constant by more than 1.05.
pub fn divergence_check(template: &FreQuery, cutoffs: &[f64], m: f64) -> Result<DivergenceReport, FreError> {
    if cutoffs.len() < 2 {
        return Err(FreError::TooFewPoints { needed: 2, got: cutoffs.len() });
    }
    let mut constants = Vec::with_capacity(cutoffs.len());
    for &x in cutoffs {
        let mut q = template.clone();
        q.lattice.cutoff = x;
        let top = (x / 10.0).powi(2);
        let mut best: f64 = 0.0;
        let mut j = 6;
        while 2f64.powi(j) <= top {
            let a = 2f64.powi(j);
            if m <= a {
                let r = both_signs(&q, a, m)?;
                best = best.max(r.value / (jp(a) * m));
            }
            j += 1;
        }
        constants.push(best);
    }
    let diverging = constants.windows(2).all(|w| w[0] > 0.0 && w[1] > 1.05 * w[0]);
    Ok(DivergenceReport { cutoffs: cutoffs.to_vec(), constants, diverging })
}
