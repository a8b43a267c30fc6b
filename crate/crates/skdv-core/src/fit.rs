//! Least-squares fits in log-log coordinates.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// standard error of the slope
    pub slope_stderr: f64,
}

/// Ordinary least squares `y = slope x + intercept`. Needs two distinct abscissae.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = (syy - slope * sxy).max(0.0);
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    let slope_stderr = if n > 2 { (sse / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Some(LinearFit { slope, intercept, r_squared, slope_stderr })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneFit {
    pub coef_a: f64,
    pub coef_b: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares `z = coef_a a + coef_b b + intercept`.
pub fn plane_fit(a: &[f64], b: &[f64], z: &[f64]) -> Option<PlaneFit> {
    let n = z.len();
    if n < 3 || a.len() != n || b.len() != n {
        return None;
    }
    let nf = n as f64;
    let ma = a.iter().sum::<f64>() / nf;
    let mb = b.iter().sum::<f64>() / nf;
    let mz = z.iter().sum::<f64>() / nf;
    let (mut saa, mut sab, mut sbb, mut saz, mut sbz, mut szz) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let (da, db, dz) = (a[i] - ma, b[i] - mb, z[i] - mz);
        saa += da * da;
        sab += da * db;
        sbb += db * db;
        saz += da * dz;
        sbz += db * dz;
        szz += dz * dz;
    }
    let det = saa * sbb - sab * sab;
    if !(det.abs() > 1e-12 * (saa * sbb).max(1e-300)) {
        return None;
    }
    let coef_a = (saz * sbb - sbz * sab) / det;
    let coef_b = (sbz * saa - saz * sab) / det;
    let intercept = mz - coef_a * ma - coef_b * mb;
    let sse = (szz - coef_a * saz - coef_b * sbz).max(0.0);
    let r_squared = if szz > 0.0 { (1.0 - sse / szz).clamp(0.0, 1.0) } else { 1.0 };
    Some(PlaneFit { coef_a, coef_b, intercept, r_squared })
}

/// Solve a small dense system by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / a[r][r];
    }
    Some(x)
}

/// Least squares `min |A x - y|` through the normal equations.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let p = rows.first()?.len();
    let mut ata = vec![vec![0.0; p]; p];
    let mut aty = vec![0.0; p];
    for (r, yi) in rows.iter().zip(y) {
        for i in 0..p {
            aty[i] += r[i] * yi;
            for j in 0..p {
                ata[i][j] += r[i] * r[j];
            }
        }
    }
    solve_dense(ata, aty)
}

impl LinearFit {
    /// Half width of the 95% confidence interval on the slope for `n` points.
    pub fn slope_ci95(&self, n: usize) -> f64 {
        if n <= 2 {
            return f64::INFINITY;
        }
        student_t975(n - 2) * self.slope_stderr
    }
}

/// Two-sided 95% quantile of Student's t with `dof` degrees of freedom.
pub fn student_t975(dof: usize) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    if dof == 0 {
        return f64::INFINITY;
    }
    StudentsT::new(0.0, 1.0, dof as f64).map(|t| t.inverse_cdf(0.975)).unwrap_or(f64::INFINITY)
}
