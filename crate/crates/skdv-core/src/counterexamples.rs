//! Quadrature harnesses for the ill-posedness growth rates.
//!
//! Two kinds of witness live here. The dualized bilinear forms take indicator data on
//! unit boxes at frequency `N` and integrate the Bourgain weights over the convolution
//! constraint `tau = tau1 + tau2, xi = xi1 + xi2`; if the bilinear estimate held, the
//! result would stay bounded in `N`. The second-iterate harnesses compute the
//! `epsilon^2` term of the flow map at time `t = c N^-3` with the time integral done
//! analytically; a `C^2` flow would bound it by the data norms.
//!
//! Every value is a nonnegative real. [`GrowthExperiment`] sweeps dyadic `N`, fits the
//! log-log slope and compares it with the predicted exponent.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::fit::linear_fit;
use crate::par::Parallelism;
use crate::quad::GaussLegendre;
use crate::resonance::duhamel_kernel;
use crate::spectral::{japanese, Regularity};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CounterexampleError {
    #[error("unknown family `{0}` (expected cor41, cor42, sec6_u or sec6_v)")]
    UnknownFamily(String),
    #[error("N = {n} below the family minimum {min}")]
    NTooSmall { n: f64, min: f64 },
    #[error("N values must be finite, distinct and increasing")]
    BadNValues,
    #[error("need at least {needed} N values, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("c_time = {0} outside (0, 1)")]
    BadCTime(f64),
    #[error("rho = {rho} outside the admissible window ({lo}, {hi})")]
    RhoOutsideWindow { rho: f64, lo: f64, hi: f64 },
    #[error("rho is required for sec6_v")]
    MissingRho,
    #[error("quadrature order must be at least 2")]
    BadOrder,
    #[error("regularity: {0}")]
    Regularity(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Dualized Schrodinger coupling estimate, high KdV input.
    Cor41,
    /// Dualized KdV coupling estimate.
    Cor42,
    /// Second iterate for `u`, low Schrodinger and high KdV data.
    #[serde(alias = "sec6_region1")]
    Sec6U,
    /// Second iterate for `v`, power-law Schrodinger data.
    #[serde(alias = "sec6_region2")]
    Sec6V,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Cor41, Family::Cor42, Family::Sec6U, Family::Sec6V];

    pub fn name(self) -> &'static str {
        match self {
            Family::Cor41 => "cor41",
            Family::Cor42 => "cor42",
            Family::Sec6U => "sec6_u",
            Family::Sec6V => "sec6_v",
        }
    }

    /// Smallest `N` for which the harness geometry is as intended.
    pub fn min_n(self) -> f64 {
        match self {
            Family::Cor41 | Family::Cor42 => 4.0,
            Family::Sec6U => 8.0,
            Family::Sec6V => 16.0,
        }
    }

    /// Growth exponent of the value in `N`.
    pub fn predicted_exponent(self, reg: &Regularity, rho: Option<f64>) -> f64 {
        let (k, s, b, bp) = (reg.k, reg.s, reg.b, reg.b_prime);
        match self {
            Family::Cor41 => bp - 3.0 * b + k - s,
            Family::Cor42 => 1.0 + s - k + 3.0 * bp - b,
            Family::Sec6U => k - 3.0,
            Family::Sec6V => s - 2.0 - rho.unwrap_or(f64::NAN) + 0.5,
        }
    }

    pub fn uses_time(self) -> bool {
        matches!(self, Family::Sec6U | Family::Sec6V)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = CounterexampleError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cor41" => Ok(Family::Cor41),
            "cor42" => Ok(Family::Cor42),
            "sec6_u" | "sec6_region1" => Ok(Family::Sec6U),
            "sec6_v" | "sec6_region2" => Ok(Family::Sec6V),
            _ => Err(CounterexampleError::UnknownFamily(s.to_string())),
        }
    }
}

/// Admissible `rho` for the power-law data: `max(k + 1/2, 1) < rho < s - 3/2`.
///
/// The lower end `k + 1/2` keeps the data bounded in `H^k`; `rho > 1` makes the
/// inner integral converge, without which the growth rate changes.
pub fn rho_window(reg: &Regularity) -> (f64, f64) {
    ((reg.k + 0.5).max(1.0), reg.s - 1.5)
}

/// Gauss-Legendre panel layout. Doubling `order` is the refinement used to
/// check quadrature convergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    /// nodes per panel
    pub order: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { order: 8 }
    }
}

impl Quadrature {
    pub fn doubled(self) -> Self {
        Quadrature { order: 2 * self.order }
    }
}

type Nodes = Vec<(f64, f64)>;

/// Panels on `[a, b]` refined geometrically toward both ends: widths `h0, h0, 2 h0, ...`
/// capped at `hmax`.
fn graded_nodes(gl: &GaussLegendre, a: f64, b: f64, h0: f64, hmax: f64) -> Nodes {
    let mut out = Vec::new();
    if !(b > a) {
        return out;
    }
    let mid = 0.5 * (a + b);
    let mut left = vec![a];
    let mut x = a;
    let mut h = h0.min(mid - a);
    while x < mid {
        let next = (x + h).min(mid);
        left.push(next);
        if next > a + h0 {
            h = (2.0 * h).min(hmax);
        }
        x = next;
    }
    let mut breaks = left.clone();
    for &p in left.iter().rev().skip(1) {
        breaks.push(a + b - p);
    }
    *breaks.last_mut().unwrap() = b;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            out.extend(gl.on(w[0], w[1]));
        }
    }
    out
}

/// Sorted breakpoints of `[lo, hi]` at the interior `cuts`.
fn pieces(lo: f64, hi: f64, cuts: &[f64]) -> Vec<(f64, f64)> {
    let mut pts = vec![lo];
    let mut inner: Vec<f64> = cuts.iter().copied().filter(|&c| c > lo && c < hi).collect();
    inner.sort_by(f64::total_cmp);
    pts.extend(inner);
    pts.push(hi);
    pts.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect()
}

/// Box `[xi_lo, xi_hi] x [tau_lo, tau_hi]`, the support of an indicator datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqBox {
    pub xi: (f64, f64),
    pub tau: (f64, f64),
}

/// Supports of `h1`, `h2` and the dual function `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualSupports {
    pub h1: FreqBox,
    pub h2: FreqBox,
    pub h: FreqBox,
}

impl DualSupports {
    /// `h1` on the unit box at the origin, `h2` and `h` on `[N, N+1] x [N^2, N^2+1]`.
    pub fn high_low(n: f64) -> Self {
        let high = FreqBox { xi: (n, n + 1.0), tau: (n * n, n * n + 1.0) };
        DualSupports { h1: FreqBox { xi: (0.0, 1.0), tau: (0.0, 1.0) }, h2: high, h: high }
    }
}

/// A point of the constraint set. `xi2 = xi - xi1`, `tau2 = tau - tau1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualPoint {
    pub xi: f64,
    pub tau: f64,
    pub xi1: f64,
    pub tau1: f64,
}

impl DualPoint {
    pub fn xi2(&self) -> f64 {
        self.xi - self.xi1
    }
    pub fn tau2(&self) -> f64 {
        self.tau - self.tau1
    }
}

/// Integrand of the dualized Schrodinger coupling estimate:
/// `<xi>^k <tau - xi^2>^b' / (<xi1>^k <tau1 - xi1^2>^b <xi2>^s <tau2 + xi2^3>^b)`.
pub fn cor41_weight(reg: &Regularity, p: &DualPoint) -> f64 {
    let (xi2, tau2) = (p.xi2(), p.tau2());
    let num = japanese(p.xi).powf(reg.k) * japanese(p.tau - p.xi * p.xi).powf(reg.b_prime);
    let den = japanese(p.xi1).powf(reg.k)
        * japanese(p.tau1 - p.xi1 * p.xi1).powf(reg.b)
        * japanese(xi2).powf(reg.s)
        * japanese(tau2 + xi2 * xi2 * xi2).powf(reg.b);
    num / den
}

/// Integrand of the dualized KdV coupling estimate:
/// `|xi| <xi>^s <tau + xi^3>^b' / (<xi1>^k <tau1 - xi1^2>^b <xi2>^k <tau2 - xi2^2>^b)`.
pub fn cor42_weight(reg: &Regularity, p: &DualPoint) -> f64 {
    let (xi2, tau2) = (p.xi2(), p.tau2());
    let num = p.xi.abs() * japanese(p.xi).powf(reg.s) * japanese(p.tau + p.xi * p.xi * p.xi).powf(reg.b_prime);
    let den = japanese(p.xi1).powf(reg.k)
        * japanese(p.tau1 - p.xi1 * p.xi1).powf(reg.b)
        * japanese(xi2).powf(reg.k)
        * japanese(tau2 - xi2 * xi2).powf(reg.b);
    num / den
}

/// Nodes for `x in A, x1 in A1` with `x - x1 in A2`, as `(x, x1, weight)`.
///
/// For fixed `x` the admissible `x1` form an interval whose ends are piecewise linear in
/// `x`; the outer range is split at the kinks. Both levels are graded toward their ends
/// with first panel `h0`.
fn constraint_nodes(gl: &GaussLegendre, a: (f64, f64), a1: (f64, f64), a2: (f64, f64), h0: f64, hmax: f64) -> Vec<(f64, f64, f64)> {
    let lo = a.0.max(a1.0 + a2.0);
    let hi = a.1.min(a1.1 + a2.1);
    let mut out = Vec::new();
    if !(hi > lo) {
        return out;
    }
    for (p, q) in pieces(lo, hi, &[a1.0 + a2.1, a1.1 + a2.0]) {
        for (x, wx) in graded_nodes(gl, p, q, h0, hmax) {
            let ilo = a1.0.max(x - a2.1);
            let ihi = a1.1.min(x - a2.0);
            for (x1, w1) in graded_nodes(gl, ilo, ihi, h0, hmax) {
                out.push((x, x1, wx * w1));
            }
        }
    }
    out
}

/// `int h h1 h2 W dtau dxi dtau1 dxi1` for indicator data on `sup`.
///
/// `feature` is the smallest length scale of `W` in the `xi` variables; the modulation
/// factors vary on that scale near the corners of the constraint set.
pub fn dualized_form<W>(sup: &DualSupports, weight: W, feature: f64, quad: Quadrature, par: Parallelism) -> f64
where
    W: Fn(&DualPoint) -> f64 + Sync + Send,
{
    let gl = GaussLegendre::new(quad.order);
    let xi_nodes = constraint_nodes(&gl, sup.h.xi, sup.h1.xi, sup.h2.xi, feature, 0.25);
    let tau_nodes = constraint_nodes(&gl, sup.h.tau, sup.h1.tau, sup.h2.tau, 0.5, 0.5);
    if xi_nodes.is_empty() || tau_nodes.is_empty() {
        return 0.0;
    }
    let partial = par.map_slice(&xi_nodes, |&(xi, xi1, wx)| {
        let mut acc = 0.0;
        for &(tau, tau1, wt) in &tau_nodes {
            acc += wt * weight(&DualPoint { xi, tau, xi1, tau1 });
        }
        wx * acc
    });
    partial.iter().sum()
}

/// Dualized Schrodinger coupling form on the high-low boxes. Grows like
/// `N^(b' - 3b + k - s)`. Meant for `N >= 4`.
pub fn cor41_value(n: f64, reg: &Regularity, quad: Quadrature, par: Parallelism) -> f64 {
    let reg = *reg;
    dualized_form(&DualSupports::high_low(n), move |p| cor41_weight(&reg, p), 0.125 / n, quad, par)
}

/// Dualized KdV coupling form on the high-low boxes. Grows like
/// `N^(1 + s - k + 3b' - b)`. Meant for `N >= 4`.
pub fn cor42_value(n: f64, reg: &Regularity, quad: Quadrature, par: Parallelism) -> f64 {
    let reg = *reg;
    dualized_form(&DualSupports::high_low(n), move |p| cor42_weight(&reg, p), 0.125 / n, quad, par)
}

/// Weighted `L^2` norm `(int_lo^hi <xi>^{2 sigma} |I(xi)|^2 dxi)^(1/2)` of
/// `I(xi) = m(xi) int K(t, Phi) f(xi1) g(xi - xi1) dxi1` with `f, g` supported on
/// `supp_f, supp_g`.
struct IterateNorm<'a> {
    window: (f64, f64),
    supp_f: (f64, f64),
    supp_g: (f64, f64),
    sigma: f64,
    t: f64,
    phase: &'a (dyn Fn(f64, f64, f64) -> f64 + Sync),
    amplitude: &'a (dyn Fn(f64, f64, f64) -> f64 + Sync),
    /// grading of the inner and outer panels
    h0: f64,
    hmax: f64,
}

impl IterateNorm<'_> {
    fn eval(&self, quad: Quadrature, par: Parallelism) -> f64 {
        let (f, g) = (self.supp_f, self.supp_g);
        let lo = self.window.0.max(f.0 + g.0);
        let hi = self.window.1.min(f.1 + g.1);
        if !(hi > lo) || self.t == 0.0 {
            return 0.0;
        }
        let gl = GaussLegendre::new(quad.order);
        let outer: Nodes = pieces(lo, hi, &[f.0 + g.1, f.1 + g.0])
            .into_iter()
            .flat_map(|(p, q)| graded_nodes(&gl, p, q, self.h0, self.hmax))
            .collect();
        let sq = par.map_slice(&outer, |&(xi, w)| {
            let ilo = f.0.max(xi - g.1);
            let ihi = f.1.min(xi - g.0);
            let mut acc = num_complex::Complex64::new(0.0, 0.0);
            for (xi1, w1) in graded_nodes(&gl, ilo, ihi, self.h0, self.hmax) {
                let xi2 = xi - xi1;
                acc += duhamel_kernel((self.phase)(xi, xi1, xi2), self.t) * ((self.amplitude)(xi, xi1, xi2) * w1);
            }
            w * japanese(xi).powf(2.0 * self.sigma) * acc.norm_sqr()
        });
        sq.iter().sum::<f64>().sqrt()
    }
}

/// `H^k` norm of the second `u` iterate at `t = c N^-3` for `u0^ = 1_[-1,1]`,
/// `v0^ = 1_[N-1,N+1]`, with `Phi = xi^2 - xi1^2 + xi2^3`. Grows like `N^(k-3)`.
/// Meant for `N >= 8`; `c = 0` gives 0.
pub fn sec6_u_iterate(n: f64, reg: &Regularity, c_time: f64, quad: Quadrature, par: Parallelism) -> f64 {
    let phase = |xi: f64, xi1: f64, xi2: f64| xi * xi - xi1 * xi1 + xi2 * xi2 * xi2;
    let one = |_: f64, _: f64, _: f64| 1.0;
    IterateNorm {
        window: (f64::NEG_INFINITY, f64::INFINITY),
        supp_f: (-1.0, 1.0),
        supp_g: (n - 1.0, n + 1.0),
        sigma: reg.k,
        t: c_time / (n * n * n),
        phase: &phase,
        amplitude: &one,
        h0: 0.5,
        hmax: 0.5,
    }
    .eval(quad, par)
}

/// `H^s` norm over `xi in [N/2, N]` of the second `v` iterate at `t = c N^-3` for
/// `u0^ = <xi>^-rho 1_[0,N]`, with `Phi = xi^3 - xi1^2 + xi2^2`. The integrand is
/// `xi K(t, Phi) u0^(xi1) conj(u0^(-xi2))`. Grows like `N^(s - 2 - rho + 1/2)` for `rho > 1`.
/// Meant for `N >= 16`.
pub fn sec6_v_iterate(n: f64, reg: &Regularity, rho: f64, c_time: f64, quad: Quadrature, par: Parallelism) -> f64 {
    let phase = |xi: f64, xi1: f64, xi2: f64| xi * xi * xi - xi1 * xi1 + xi2 * xi2;
    let amp = move |xi: f64, xi1: f64, xi2: f64| xi * japanese(xi1).powf(-rho) * japanese(xi2).powf(-rho);
    IterateNorm {
        window: (0.5 * n, n),
        supp_f: (0.0, n),
        supp_g: (-n, 0.0),
        sigma: reg.s,
        t: c_time / (n * n * n),
        phase: &phase,
        amplitude: &amp,
        h0: 0.25,
        hmax: f64::INFINITY,
    }
    .eval(quad, par)
}

/// `H^s` norm over `window` of the `d_x(v^2)` part of the second `v` iterate for
/// `v0^ = 1_[-1,1]`, with `Phi = xi^3 - xi1^3 - xi2^3`. Vanishes identically on `|xi| > 2`.
pub fn v_self_interaction_norm(window: (f64, f64), reg: &Regularity, t: f64, quad: Quadrature, par: Parallelism) -> f64 {
    let phase = |xi: f64, xi1: f64, xi2: f64| xi * xi * xi - xi1 * xi1 * xi1 - xi2 * xi2 * xi2;
    let amp = |xi: f64, _: f64, _: f64| xi;
    IterateNorm {
        window,
        supp_f: (-1.0, 1.0),
        supp_g: (-1.0, 1.0),
        sigma: reg.s,
        t,
        phase: &phase,
        amplitude: &amp,
        h0: 0.5,
        hmax: 0.5,
    }
    .eval(quad, par)
}

/// The `d_x(v^2)` contribution in the `sec6_v` window after projecting to `|xi| > 2`.
pub fn sec6_v_self_term(n: f64, reg: &Regularity, c_time: f64, quad: Quadrature, par: Parallelism) -> f64 {
    let window = ((0.5 * n).max(2.0), n);
    if !(window.1 > window.0) {
        return 0.0;
    }
    v_self_interaction_norm(window, reg, c_time / (n * n * n), quad, par)
}

/// `2^lo, ..., 2^hi`.
pub fn dyadic(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 2f64.powi(e)).collect()
}

/// The `c` values of the time-constant sweep.
pub const C_TIME_SWEEP: [f64; 3] = [0.05, 0.1, 0.2];

/// A sweep of one family over dyadic `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthExperiment {
    pub family: Family,
    pub n_values: Vec<f64>,
    pub regularity: Regularity,
    /// the constant in `t = c N^-3`
    pub c_time: f64,
    /// power of the `sec6_v` data
    pub rho: Option<f64>,
    pub quadrature: Quadrature,
    #[serde(skip)]
    pub parallelism: Parallelism,
}

impl GrowthExperiment {
    pub fn new(
        family: Family,
        n_values: Vec<f64>,
        regularity: Regularity,
        c_time: f64,
        rho: Option<f64>,
    ) -> Result<Self, CounterexampleError> {
        let e = GrowthExperiment {
            family,
            n_values,
            regularity,
            c_time,
            rho: if family == Family::Sec6V { rho } else { None },
            quadrature: Quadrature::default(),
            parallelism: Parallelism::default(),
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<(), CounterexampleError> {
        self.regularity.validate().map_err(CounterexampleError::Regularity)?;
        if self.n_values.len() < 3 {
            return Err(CounterexampleError::TooFewPoints { needed: 3, got: self.n_values.len() });
        }
        if self.n_values.iter().any(|n| !n.is_finite()) || self.n_values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CounterexampleError::BadNValues);
        }
        let min = self.family.min_n();
        if self.n_values[0] < min {
            return Err(CounterexampleError::NTooSmall { n: self.n_values[0], min });
        }
        if !(self.c_time > 0.0 && self.c_time < 1.0) {
            return Err(CounterexampleError::BadCTime(self.c_time));
        }
        if self.quadrature.order < 2 {
            return Err(CounterexampleError::BadOrder);
        }
        if self.family == Family::Sec6V {
            let rho = self.rho.ok_or(CounterexampleError::MissingRho)?;
            let (lo, hi) = rho_window(&self.regularity);
            if !(rho > lo && rho < hi) {
                return Err(CounterexampleError::RhoOutsideWindow { rho, lo, hi });
            }
        }
        Ok(())
    }

    pub fn predicted_exponent(&self) -> f64 {
        self.family.predicted_exponent(&self.regularity, self.rho)
    }

    /// Value at one `N`.
    pub fn value_at(&self, n: f64) -> f64 {
        let (reg, q, par) = (&self.regularity, self.quadrature, self.parallelism);
        match self.family {
            Family::Cor41 => cor41_value(n, reg, q, par),
            Family::Cor42 => cor42_value(n, reg, q, par),
            Family::Sec6U => sec6_u_iterate(n, reg, self.c_time, q, par),
            Family::Sec6V => sec6_v_iterate(n, reg, self.rho.unwrap_or(f64::NAN), self.c_time, q, par),
        }
    }

    pub fn run(&self) -> Result<GrowthReport, CounterexampleError> {
        self.validate()?;
        let values: Vec<f64> = self.n_values.iter().map(|&n| self.value_at(n)).collect();
        Ok(GrowthReport::new(self.clone(), values))
    }

    /// The same sweep at each `c` in [`C_TIME_SWEEP`].
    pub fn c_time_sweep(&self) -> Result<Vec<GrowthReport>, CounterexampleError> {
        C_TIME_SWEEP.iter().map(|&c| GrowthExperiment { c_time: c, ..self.clone() }.run()).collect()
    }
}

/// Log-log slope of value against `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub family: Family,
    pub slope: f64,
    pub ci95: (f64, f64),
    pub r_squared: f64,
    pub predicted: f64,
    /// slopes between consecutive `N`
    pub local_slopes: Vec<f64>,
    /// number of points with a positive value
    pub points: usize,
}

impl SlopeFit {
    pub fn error(&self) -> f64 {
        self.slope - self.predicted
    }

    pub fn within(&self, tol: f64) -> bool {
        self.error().abs() <= tol
    }

    /// Largest change between consecutive local slopes over `N >= n_min`.
    pub fn local_slope_drift(&self, n_values: &[f64], n_min: f64) -> f64 {
        let start = n_values.iter().position(|&n| n >= n_min).unwrap_or(n_values.len());
        self.local_slopes
            .iter()
            .skip(start)
            .collect::<Vec<_>>()
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub experiment: GrowthExperiment,
    pub values: Vec<f64>,
    /// `None` when fewer than two values are positive
    pub fit: Option<SlopeFit>,
}

pub const CSV_HEADER: &str = "family,N,k,s,b,bprime,rho,c,value";

impl GrowthReport {
    fn new(experiment: GrowthExperiment, values: Vec<f64>) -> Self {
        let (xs, ys): (Vec<f64>, Vec<f64>) = experiment
            .n_values
            .iter()
            .zip(&values)
            .filter(|(_, v)| **v > 0.0 && v.is_finite())
            .map(|(n, v)| (n.ln(), v.ln()))
            .unzip();
        let fit = linear_fit(&xs, &ys).map(|lf| {
            let half = lf.slope_ci95(xs.len());
            SlopeFit {
                family: experiment.family,
                slope: lf.slope,
                ci95: (lf.slope - half, lf.slope + half),
                r_squared: lf.r_squared,
                predicted: experiment.predicted_exponent(),
                local_slopes: xs.windows(2).zip(ys.windows(2)).map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0])).collect(),
                points: xs.len(),
            }
        });
        GrowthReport { experiment, values, fit }
    }

    /// One row per `N`. Floats use 17 significant digits; fields that do not apply
    /// to the family are left empty.
    pub fn to_csv(&self) -> String {
        let e = &self.experiment;
        let r = &e.regularity;
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let rho = e.rho.map(|x| format!("{x:.16e}")).unwrap_or_default();
        let c = if e.family.uses_time() { format!("{:.16e}", e.c_time) } else { String::new() };
        for (n, v) in e.n_values.iter().zip(&self.values) {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{:.16e}\n",
                e.family, n, r.k, r.s, r.b, r.b_prime, rho, c, v
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_nodes_integrate_polynomials_exactly() {
        let gl = GaussLegendre::new(6);
        for (h0, hmax) in [(1e-3, 0.1), (0.5, 0.5), (10.0, f64::INFINITY)] {
            let s: f64 = graded_nodes(&gl, -1.0, 2.0, h0, hmax).iter().map(|(x, w)| w * x * x * x).sum();
            assert!((s - 3.75).abs() < 1e-12, "{h0}: {s}");
        }
        assert!(graded_nodes(&gl, 1.0, 1.0, 0.1, 1.0).is_empty());
    }

    #[test]
    fn constraint_nodes_measure_the_triangle() {
        let gl = GaussLegendre::new(4);
        let area: f64 = constraint_nodes(&gl, (5.0, 6.0), (0.0, 1.0), (5.0, 6.0), 0.01, 0.25).iter().map(|t| t.2).sum();
        assert!((area - 0.5).abs() < 1e-13);
        let full: f64 = constraint_nodes(&gl, (-10.0, 10.0), (0.0, 1.0), (0.0, 2.0), 0.01, 0.25).iter().map(|t| t.2).sum();
        assert!((full - 2.0).abs() < 1e-13);
    }

    #[test]
    fn kernel_is_the_time_integral() {
        let (phi, t) = (3.7, 0.4);
        let gl = GaussLegendre::new(20);
        let re = gl.integrate(|s| (s * phi).cos(), 0.0, t);
        let im = gl.integrate(|s| (s * phi).sin(), 0.0, t);
        let k = duhamel_kernel(phi, t);
        assert!((k.re - re).abs() < 1e-14 && (k.im - im).abs() < 1e-14);
    }
}
