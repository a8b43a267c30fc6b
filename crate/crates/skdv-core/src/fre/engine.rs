//! Brute-force evaluation of one frequency-restricted estimate.
//!
//! The value is `sup over the fixed slots` of the integral, over the remaining free
//! frequencies, of `weight * Xi^eta * 1{|Phi - alpha| < M}` restricted to the region.
//! The innermost free variable is integrated exactly piecewise: along a line the phase is
//! an explicit cubic, so the window endpoints are cubic roots and every region clause
//! switches at a linear root. Outer free variables use Gauss-Legendre on dyadic panels.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::par::Parallelism;
use crate::quad::{adaptive_gk, cubic_roots_in, golden_max, GaussLegendre};
use crate::resonance::RegionParams;
use crate::spectral::Regularity;

use super::catalog::{catalog_lookup, jp, EstimateSpec, Region, RegionFn, SeparablePhase, WeightFn};
use super::FreError;

/// Sampling of the fixed slots and truncation of every frequency to `|x| <= cutoff`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub cutoff: f64,
    /// Dyadic lattice points per octave for the fixed slots.
    pub per_octave: usize,
    /// Rays per decade of slope used to seed the lattice with points on the level set `Phi = alpha`.
    pub rays_per_decade: usize,
}

impl Default for Lattice {
    fn default() -> Self {
        Lattice { cutoff: 4096.0, per_octave: 12, rays_per_decade: 8 }
    }
}

#[derive(Clone)]
pub struct FreQuery {
    pub spec: Arc<EstimateSpec>,
    /// Slots held fixed (`0` is the output). `None` takes every option of the entry's criterion and keeps the largest.
    pub fixed: Option<Vec<usize>>,
    pub alpha_mod: f64,
    /// Window half-width `M`; infinite for unwindowed sups.
    pub m_width: f64,
    pub regularity: Regularity,
    pub region_params: RegionParams,
    pub lattice: Lattice,
    /// Exponent of the `Xi = max <x_j>` factor; defaults to `regularity.eta_plus`.
    pub xi_weight_eta: Option<f64>,
    /// Integrand replacing the squared multiplier (two-sided criteria).
    pub weight: Option<WeightFn>,
    /// Extra region intersected with the entry's own.
    pub extra_region: Option<RegionFn>,
    /// Re-evaluate with a doubled lattice and flag changes above 5%.
    pub check_refinement: bool,
    pub parallelism: Parallelism,
}

impl std::fmt::Debug for FreQuery {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FreQuery")
            .field("id", &self.spec.id)
            .field("fixed", &self.fixed)
            .field("alpha_mod", &self.alpha_mod)
            .field("m_width", &self.m_width)
            .field("lattice", &self.lattice)
            .finish_non_exhaustive()
    }
}

impl FreQuery {
    pub fn new(spec: EstimateSpec, regularity: Regularity) -> Self {
        let windowed = spec.windowed();
        FreQuery {
            spec: Arc::new(spec),
            fixed: None,
            alpha_mod: 0.0,
            m_width: if windowed { 1.0 } else { f64::INFINITY },
            regularity,
            region_params: RegionParams::default(),
            lattice: Lattice::default(),
            xi_weight_eta: None,
            weight: None,
            extra_region: None,
            check_refinement: true,
            parallelism: Parallelism::default(),
        }
    }

    pub fn catalog(id: &str, regularity: Regularity) -> Result<Self, FreError> {
        Ok(Self::new(catalog_lookup(id)?, regularity))
    }

    pub fn at(mut self, alpha_mod: f64, m_width: f64) -> Self {
        self.alpha_mod = alpha_mod;
        self.m_width = m_width;
        self
    }

    pub fn validate(&self) -> Result<(), FreError> {
        let n = self.spec.variables.len();
        if !(self.m_width > 0.0) {
            return Err(FreError::Invalid(format!("window width M = {} must be positive", self.m_width)));
        }
        if !self.alpha_mod.is_finite() {
            return Err(FreError::Invalid("alpha_mod must be finite".into()));
        }
        let l = &self.lattice;
        if !(l.cutoff > 0.0 && l.cutoff.is_finite()) || l.per_octave == 0 || l.rays_per_decade == 0 {
            return Err(FreError::Invalid("lattice needs a finite positive cutoff and nonzero densities".into()));
        }
        if self.m_width.is_finite() && l.cutoff < 10.0 * self.alpha_mod.abs().sqrt().max(self.m_width) {
            return Err(FreError::Invalid(format!(
                "cutoff {} below 10 max(|alpha|^(1/2), M) = {}",
                l.cutoff,
                10.0 * self.alpha_mod.abs().sqrt().max(self.m_width)
            )));
        }
        if let Some(f) = &self.fixed {
            let mut g = f.clone();
            g.sort_unstable();
            g.dedup();
            if g.len() != f.len() || f.is_empty() || f.iter().any(|&j| j >= n) || n - f.len() < 2 {
                return Err(FreError::Invalid(format!("fixed slots {f:?} must be distinct, nonempty and leave a free frequency")));
            }
        }
        self.region_params.validate().map_err(FreError::Invalid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreResult {
    pub value: f64,
    /// Slots held fixed at the sup.
    pub fixed_slots: Vec<usize>,
    /// Values of those slots at the sup.
    pub argmax_freq: Vec<f64>,
    /// Measure of the window set (intersected with the region) at the sup.
    pub set_measure: f64,
    /// Value at the base lattice density when a refinement pass was run.
    pub coarse_value: Option<f64>,
    pub under_resolved: bool,
    /// The sup sits near the cutoff.
    pub boundary: bool,
    /// A piece of the integral failed to converge (non-integrable weight).
    pub singular: bool,
}

impl FreResult {
    pub fn flagged(&self) -> bool {
        self.under_resolved || self.singular
    }
}

struct Ctx<'a> {
    n: usize,
    phase: &'a SeparablePhase,
    region: Region,
    weight: &'a (dyn Fn(&[f64], &Regularity) -> f64 + Send + Sync),
    reg: Regularity,
    alpha: f64,
    m: f64,
    cutoff: f64,
    eta: f64,
    gl: GaussLegendre,
}

#[derive(Debug, Clone, Copy, Default)]
struct Integral {
    value: f64,
    measure: f64,
    singular: bool,
}

impl Integral {
    fn add(&mut self, o: Integral, w: f64) {
        self.value += w * o.value;
        self.measure += w * o.measure;
        self.singular |= o.singular;
    }
}

/// Free-variable layout for one choice of fixed slots.
struct Layout {
    fixed: Vec<usize>,
    free: Vec<usize>,
    det: usize,
}

impl Layout {
    fn new(n: usize, fixed: &[usize]) -> Self {
        let rest: Vec<usize> = (0..n).filter(|j| !fixed.contains(j)).collect();
        let det = *rest.last().expect("validated");
        Layout { fixed: fixed.to_vec(), free: rest[..rest.len() - 1].to_vec(), det }
    }

    /// `d x_det / d x_v` under the constraint `x_0 = sum of inputs`.
    fn slope(&self, v: usize) -> f64 {
        if self.det == 0 || v == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn complete(&self, x: &mut [f64]) {
        let d = self.det;
        x[d] = if d == 0 {
            x[1..].iter().sum()
        } else {
            x[0] - x[1..].iter().enumerate().filter(|(i, _)| i + 1 != d).map(|(_, v)| v).sum::<f64>()
        };
    }
}

impl Ctx<'_> {
    fn integrand(&self, x: &[f64]) -> f64 {
        let xi = x[1..].iter().fold(1.0f64, |m, &v| m.max(jp(v)));
        let w = (self.weight)(x, &self.reg);
        if self.eta == 0.0 {
            w
        } else {
            w * xi.powf(self.eta)
        }
    }

    fn in_window(&self, phi: f64) -> bool {
        !self.m.is_finite() || (phi - self.alpha).abs() < self.m
    }

    /// Exact piecewise integral along `p + t q`, `t` free, every coordinate within the cutoff.
    fn line(&self, p: &[f64], q: &[f64]) -> Integral {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (&a, &b) in p.iter().zip(q) {
            if b == 0.0 {
                if a.abs() > self.cutoff {
                    return Integral::default();
                }
            } else {
                let (t1, t2) = ((-self.cutoff - a) / b, (self.cutoff - a) / b);
                lo = lo.max(t1.min(t2));
                hi = hi.min(t1.max(t2));
            }
        }
        if !(hi > lo) {
            return Integral::default();
        }
        let c = self.phase.along(p, q);
        let mut cuts = vec![lo, hi];
        if self.m.is_finite() {
            for level in [self.alpha - self.m, self.alpha + self.m] {
                cuts.extend(cubic_roots_in([c[0] - level, c[1], c[2], c[3]], lo, hi));
            }
        }
        let mut sw = Vec::new();
        self.region.switches(p, q, &mut sw);
        for (&a, &b) in p.iter().zip(q) {
            if b != 0.0 {
                sw.push(-a / b);
            }
        }
        cuts.extend(sw.into_iter().filter(|t| *t > lo && *t < hi));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut out = Integral::default();
        let mut x = vec![0.0; self.n];
        let at = |t: f64, x: &mut Vec<f64>| {
            for j in 0..p.len() {
                x[j] = p[j] + t * q[j];
            }
        };
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a <= 1e-14 * (a.abs().max(b.abs()).max(1.0)) {
                continue;
            }
            let mid = 0.5 * (a + b);
            let phi = c[0] + mid * (c[1] + mid * (c[2] + mid * c[3]));
            if !self.in_window(phi) {
                continue;
            }
            at(mid, &mut x);
            if !self.region.contains(&x) {
                continue;
            }
            let mut y = vec![0.0; self.n];
            let r = adaptive_gk(
                |t| {
                    at(t, &mut y);
                    self.integrand(&y)
                },
                a,
                b,
                0.0,
                1e-8,
            );
            out.value += r.value;
            out.measure += b - a;
            out.singular |= !r.converged || !r.value.is_finite();
        }
        out
    }

    /// Dyadic panel breaks on `[-cutoff, cutoff]`, `per_octave` panels per octave.
    fn panels(&self, per_octave: usize) -> Vec<f64> {
        let mut v = vec![0.0];
        let top = self.cutoff.log2();
        let steps = ((top + 3.0) * per_octave as f64).ceil() as i64;
        for i in 0..=steps {
            let y = (2f64).powf(-3.0 + i as f64 / per_octave as f64).min(self.cutoff);
            v.push(y);
            v.push(-y);
        }
        v.push(self.cutoff);
        v.push(-self.cutoff);
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Integral over the free variables at a point whose fixed slots are set in `x`.
    fn free_integral(&self, lay: &Layout, x: &mut Vec<f64>, level: usize, density: usize) -> Integral {
        if level + 1 == lay.free.len() {
            let f = lay.free[level];
            x[f] = 0.0;
            lay.complete(x);
            let mut q = vec![0.0; self.n];
            q[f] = 1.0;
            q[lay.det] = lay.slope(f);
            return self.line(x, &q);
        }
        let u = lay.free[level];
        let breaks = self.panels(4 * density);
        let mut acc = Integral::default();
        for w in breaks.windows(2) {
            for (node, wt) in self.gl.on(w[0], w[1]) {
                x[u] = node;
                let inner = self.free_integral(lay, x, level + 1, density);
                acc.add(inner, wt);
            }
        }
        acc
    }

    fn lattice(&self, per_octave: usize) -> Vec<f64> {
        let mut v = vec![0.0, self.cutoff, -self.cutoff];
        let top = self.cutoff.log2();
        let steps = ((top + 2.0) * per_octave as f64).floor() as i64;
        for i in 0..=steps {
            let y = (2f64).powf(-2.0 + i as f64 / per_octave as f64);
            if y < self.cutoff {
                v.push(y);
                v.push(-y);
            }
        }
        v
    }

    /// Values of the last fixed slot where a ray through the current point meets `Phi = alpha`.
    fn ray_candidates(&self, lay: &Layout, x: &[f64], rays_per_decade: usize) -> Vec<f64> {
        if !self.m.is_finite() {
            return vec![];
        }
        let y = *lay.fixed.last().expect("nonempty");
        let per = if lay.free.len() == 1 { rays_per_decade } else { (rays_per_decade / 4).max(1) };
        let mut ratios = vec![0.0];
        for j in -(3 * per as i64)..=(3 * per as i64) {
            let r = 10f64.powf(j as f64 / per as f64);
            ratios.push(r);
            ratios.push(-r);
        }
        let mut base = x.to_vec();
        base[y] = 0.0;
        for &f in &lay.free {
            base[f] = 0.0;
        }
        lay.complete(&mut base);
        let mut out = Vec::new();
        let mut combos: Vec<Vec<f64>> = vec![vec![]];
        for _ in &lay.free {
            combos = combos.into_iter().flat_map(|c| ratios.iter().map(move |&r| [c.clone(), vec![r]].concat())).collect();
        }
        for rs in combos {
            let mut w = vec![0.0; self.n];
            w[y] = 1.0;
            w[lay.det] = lay.slope(y);
            for (&f, &r) in lay.free.iter().zip(&rs) {
                w[f] += r;
                w[lay.det] += r * lay.slope(f);
            }
            let c = self.phase.along(&base, &w);
            out.extend(cubic_roots_in([c[0] - self.alpha, c[1], c[2], c[3]], -self.cutoff, self.cutoff));
        }
        out
    }

    /// Sup over fixed slot `level` and the ones after it, the earlier ones set in `x`.
    fn sup(&self, lay: &Layout, x: &mut Vec<f64>, level: usize, density: usize, lat: &Lattice, par: Option<Parallelism>) -> Best {
        let slot = lay.fixed[level];
        let last = level + 1 == lay.fixed.len();
        let po = if last { lat.per_octave } else { (lat.per_octave / 3).max(2) } * density;
        let mut cand = self.lattice(po);
        if last {
            cand.extend(self.ray_candidates(lay, x, lat.rays_per_decade * density));
        }
        cand.sort_by(f64::total_cmp);
        cand.dedup();
        let eval = |c: f64, x: &mut Vec<f64>| -> Best {
            x[slot] = c;
            if last {
                let r = self.free_integral(lay, x, 0, density);
                Best { value: r.value, at: vec![c], measure: r.measure, singular: r.singular }
            } else {
                let mut b = self.sup(lay, x, level + 1, density, lat, None);
                b.at.insert(0, c);
                b
            }
        };
        let results: Vec<Best> = match par {
            Some(p) => {
                let x0 = x.clone();
                p.map_slice(&cand, |&c| eval(c, &mut x0.clone()))
            }
            None => cand.iter().map(|&c| eval(c, x)).collect(),
        };
        let vals: Vec<f64> = results.iter().map(|b| b.value).collect();
        let i = crate::par::argmax(&vals).unwrap_or(0);
        let mut best = results[i].clone();
        if best.value > 0.0 {
            let (a, b) = (cand[i.saturating_sub(1)], cand[(i + 1).min(cand.len() - 1)]);
            if b > a {
                let iters = if last { 30 } else { 10 };
                let mut xs = x.clone();
                let (c, v) = golden_max(|c| eval(c, &mut xs).value, a, b, iters);
                if v > best.value {
                    best = eval(c, &mut xs);
                }
            }
        }
        x[slot] = best.at[0];
        best
    }
}

#[derive(Debug, Clone)]
struct Best {
    value: f64,
    at: Vec<f64>,
    measure: f64,
    singular: bool,
}

fn eval_option(q: &FreQuery, fixed: &[usize], density: usize) -> Best {
    let spec = &q.spec;
    let mut region = (spec.region)(&q.region_params);
    if let Some(extra) = &q.extra_region {
        region = region.and(extra(&q.region_params));
    }
    let default_weight = |x: &[f64], r: &Regularity| spec.weight(x, r);
    let weight: &(dyn Fn(&[f64], &Regularity) -> f64 + Send + Sync) = match &q.weight {
        Some(w) => w.as_ref(),
        None => &default_weight,
    };
    let ctx = Ctx {
        n: spec.variables.len(),
        phase: &spec.phase,
        region,
        weight,
        reg: q.regularity,
        alpha: q.alpha_mod,
        m: q.m_width,
        cutoff: q.lattice.cutoff,
        eta: q.xi_weight_eta.unwrap_or(q.regularity.eta_plus),
        gl: GaussLegendre::new(8),
    };
    let lay = Layout::new(ctx.n, fixed);
    let mut x = vec![0.0; ctx.n];
    ctx.sup(&lay, &mut x, 0, density, &q.lattice, Some(q.parallelism))
}

fn evaluate_at(q: &FreQuery, density: usize) -> (Best, Vec<usize>) {
    let options = match &q.fixed {
        Some(f) => vec![f.clone()],
        None => q.spec.fixed_options(),
    };
    let mut best: Option<(Best, Vec<usize>)> = None;
    for f in options {
        let b = eval_option(q, &f, density);
        if best.as_ref().is_none_or(|(o, _)| b.value > o.value) {
            best = Some((b, f));
        }
    }
    best.expect("at least one fixed-slot option")
}

/// Evaluate one query. Deterministic: candidate lists are fixed and reductions run in index order.
pub fn evaluate_fre(q: &FreQuery) -> Result<FreResult, FreError> {
    q.validate()?;
    let (coarse, slots) = evaluate_at(q, 1);
    let (best, slots, coarse_value, under) = if q.check_refinement {
        let (fine, fine_slots) = evaluate_at(q, 2);
        let scale = coarse.value.max(fine.value);
        let under = scale > 0.0 && (fine.value - coarse.value).abs() > 0.05 * scale;
        let keep = if fine.value >= coarse.value { (fine, fine_slots) } else { (coarse.clone(), slots) };
        (keep.0, keep.1, Some(coarse.value), under)
    } else {
        (coarse, slots, None, false)
    };
    Ok(FreResult {
        value: best.value,
        boundary: best.at.iter().any(|y| y.abs() >= 0.9 * q.lattice.cutoff) && best.value > 0.0,
        fixed_slots: slots,
        argmax_freq: best.at,
        set_measure: best.measure,
        coarse_value,
        under_resolved: under,
        singular: best.singular,
    })
}

/// Slots not in `fixed`: the other side of a two-sided split.
pub fn complement(n: usize, fixed: &[usize]) -> Vec<usize> {
    (0..n).filter(|j| !fixed.contains(j)).collect()
}

/// Both sups of a two-sided criterion: `first` fixed with the first weight, `second` fixed with the second.
///
/// The weights must multiply to the squared multiplier; this is checked on a deterministic
/// sample of admissible tuples to `1e-10` relative before anything is evaluated.
pub fn two_sided_fre(
    q: &FreQuery,
    first: &[usize],
    second: &[usize],
    weights: (WeightFn, WeightFn),
) -> Result<(FreResult, FreResult), FreError> {
    check_weight_product(q, &weights)?;
    let mut a = q.clone();
    a.fixed = Some(first.to_vec());
    a.weight = Some(weights.0);
    let mut b = q.clone();
    b.fixed = Some(second.to_vec());
    b.weight = Some(weights.1);
    Ok((evaluate_fre(&a)?, evaluate_fre(&b)?))
}

pub fn check_weight_product(q: &FreQuery, weights: &(WeightFn, WeightFn)) -> Result<(), FreError> {
    use rand::{Rng, SeedableRng};
    let n = q.spec.variables.len();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let span = q.lattice.cutoff.min(1e3);
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-span..span)).collect();
        x[0] = x[1..].iter().sum();
        let target = q.spec.weight(&x, &q.regularity);
        if !(target.is_finite() && target > 0.0) {
            continue;
        }
        let got = (weights.0)(&x, &q.regularity) * (weights.1)(&x, &q.regularity);
        worst = worst.max(((got - target) / target).abs());
        checked += 1;
        if checked == 200 {
            break;
        }
    }
    if checked == 0 || !(worst <= 1e-10) {
        return Err(FreError::WeightMismatch { relative: worst });
    }
    Ok(())
}
