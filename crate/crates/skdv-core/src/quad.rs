//! One-dimensional quadrature and root finding.

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n` from the Chebyshev guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x);
        }
        acc * h
    }

    /// Sum of the rule over consecutive panels `[p_i, p_{i+1}]`.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(&self, mut f: F, breaks: &[f64]) -> f64 {
        breaks.windows(2).map(|w| self.integrate(&mut f, w[0], w[1])).sum()
    }

    /// Mapped nodes and weights on `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (c + h * x, w * h))
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

// Gauss-Kronrod 15-point tables, digits as published
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Kronrod-15 value and the |K15 - G7| error estimate on `[a, b]`.
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let d = h * XGK[j];
        let s = f(c - d) + f(c + d);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Subintervals `adaptive_gk` may create before giving up.
pub const MAX_SUBINTERVALS: usize = 400;

/// Globally adaptive Gauss-Kronrod: the subinterval with the largest error estimate is
/// bisected until the total error meets `max(abs_tol, rel_tol |value|)`. Non-integrable
/// or very rough integrands stop at [`MAX_SUBINTERVALS`] with `converged = false`.
pub fn adaptive_gk<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> AdaptiveResult {
    if a == b {
        return AdaptiveResult { value: 0.0, error: 0.0, converged: true };
    }
    let (v0, e0) = gk15(&mut f, a, b);
    let mut parts = vec![(a, b, v0, e0)];
    let (mut value, mut error) = (v0, e0);
    loop {
        let tol = abs_tol.max(rel_tol * value.abs());
        if error <= tol.max(1e-15 * value.abs()) || !value.is_finite() {
            break;
        }
        if parts.len() >= MAX_SUBINTERVALS {
            return finish(parts, false);
        }
        let worst = (0..parts.len()).fold(0, |w, i| if parts[i].3 > parts[w].3 { i } else { w });
        let (lo, hi, v, e) = parts[worst];
        let mid = 0.5 * (lo + hi);
        if !(mid > lo.min(hi) && mid < lo.max(hi)) {
            return finish(parts, false);
        }
        let (vl, el) = gk15(&mut f, lo, mid);
        let (vr, er) = gk15(&mut f, mid, hi);
        parts[worst] = (lo, mid, vl, el);
        parts.push((mid, hi, vr, er));
        value += vl + vr - v;
        error += el + er - e;
    }
    let ok = value.is_finite();
    finish(parts, ok)
}

/// Sums in left-to-right order so the result does not depend on the refinement history.
fn finish(mut parts: Vec<(f64, f64, f64, f64)>, converged: bool) -> AdaptiveResult {
    parts.sort_by(|x, y| x.0.total_cmp(&y.0));
    let value = parts.iter().map(|p| p.2).sum();
    let error = parts.iter().map(|p| p.3).sum();
    AdaptiveResult { value, error, converged }
}

/// Root of `f` in `[a, b]` given a sign change, to absolute width `tol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Real roots in `(a, b)` of `c0 + c1 y + c2 y^2 + c3 y^3`, sorted.
///
/// Splits at the critical points so every piece is monotone, then bisects.
pub fn cubic_roots_in(c: [f64; 4], a: f64, b: f64) -> Vec<f64> {
    let p = |y: f64| c[0] + y * (c[1] + y * (c[2] + y * c[3]));
    let mut cuts = vec![a];
    // critical points: c1 + 2 c2 y + 3 c3 y^2 = 0
    let (qa, qb, qc) = (3.0 * c[3], 2.0 * c[2], c[1]);
    let mut crit = Vec::new();
    if qa != 0.0 {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            // stable pair
            let q = -0.5 * (qb + qb.signum() * sq);
            if q != 0.0 {
                crit.push(q / qa);
                crit.push(qc / q);
            } else {
                crit.push(0.0);
            }
        }
    } else if qb != 0.0 {
        crit.push(-qc / qb);
    }
    crit.sort_by(f64::total_cmp);
    for y in crit {
        if y > a && y < b {
            cuts.push(y);
        }
    }
    cuts.push(b);
    let scale = a.abs().max(b.abs()).max(1.0);
    let mut roots = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (pl, ph) = (p(lo), p(hi));
        if pl == 0.0 && lo > a {
            roots.push(lo);
        }
        if (pl < 0.0 && ph > 0.0) || (pl > 0.0 && ph < 0.0) {
            roots.push(bisect(p, lo, hi, 1e-15 * scale));
        }
    }
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * scale);
    roots
}

/// Golden-section search for a local maximum of `f` on `[a, b]`. Returns `(x, f(x))`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_exact_for_polynomials() {
        for n in [1, 2, 5, 8, 16] {
            let r = GaussLegendre::new(n);
            for deg in 0..2 * n {
                let v = r.integrate(|x| x.powi(deg as i32), 0.0, 2.0);
                let exact = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
                assert!((v - exact).abs() < 1e-12 * exact.max(1.0), "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn adaptive_handles_kink() {
        let r = adaptive_gk(|x: f64| x.abs().sqrt(), -1.0, 1.0, 1e-12, 1e-12);
        assert!((r.value - 4.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn adaptive_gives_up_on_non_integrable() {
        let r = adaptive_gk(|x: f64| 1.0 / (x * x), 0.0, 1.0, 0.0, 1e-8);
        assert!(!r.converged);
    }

    #[test]
    fn cubic_roots() {
        // (y-1)(y+2)(y-3)
        let c = [6.0, -5.0, -2.0, 1.0];
        let r = cubic_roots_in(c, -10.0, 10.0);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(cubic_roots_in([1.0, 0.0, 1.0, 0.0], -5.0, 5.0).len(), 0);
        let lin = cubic_roots_in([-2.0, 4.0, 0.0, 0.0], -5.0, 5.0);
        assert!((lin[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn golden() {
        let (x, v) = golden_max(|x| -(x - 0.3) * (x - 0.3) + 2.0, -1.0, 2.0, 80);
        assert!((x - 0.3).abs() < 1e-7 && (v - 2.0).abs() < 1e-12);
    }
}
