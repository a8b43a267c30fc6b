//! Boundary operators `B` and the operators `N_0 .. N_5` of the integrated-by-parts
//! formulations, as sparse sums over precomputed frequency pairs.
//!
//! With `a^ = e^{-i t xi^2} a~` (Schrodinger inputs) and `b^ = e^{i t xi^3} b~` (Airy
//! inputs) every kernel `e^{i t Phi} a~_1 b~_2` becomes `e^{i t psi(xi)} a^_1 b^_2`, so
//! the pair lists are time independent and only the output phase depends on `t`.

use super::products::{direct_convolution, Products};
use super::{CouplingParams, EvolveError, SpectralState};
use crate::par::Parallelism;
use crate::resonance::{in_region, phase_raw, GuardStats, PhaseId, RegionId, RegionParams};
use crate::spectral::{DealiasRule, FieldKind, Grid, SpectralField};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    U,
    V,
}

/// Pairs `(xi, xi1)` grouped by output slot, with `xi2 = xi - xi1` in the band.
#[derive(Debug, Clone, Default)]
struct PairList {
    offsets: Vec<usize>,
    in1: Vec<u32>,
    in2: Vec<u32>,
    /// multiplier of the plain sum (1 for U, xi for V)
    plain: Vec<f64>,
    /// multiplier of the integrated-by-parts sum, `plain / (i Phi)`
    ibp: Vec<Complex64>,
}

impl PairList {
    fn len(&self) -> usize {
        self.in1.len()
    }

    fn sum(&self, a: &[Complex64], b: &[Complex64], ibp: bool, par: Parallelism) -> Vec<Complex64> {
        let n = self.offsets.len() - 1;
        let mut out = vec![ZERO; n];
        let work = |o: usize| {
            let mut acc = ZERO;
            for p in self.offsets[o]..self.offsets[o + 1] {
                let w = if ibp { self.ibp[p] } else { Complex64::new(self.plain[p], 0.0) };
                acc += w * a[self.in1[p] as usize] * b[self.in2[p] as usize];
            }
            acc
        };
        // small lists are not worth the pool overhead
        let par = if self.len() < 1 << 14 { Parallelism::SEQUENTIAL } else { par };
        par.fill(&mut out, work);
        out
    }
}

/// Pair lists and guard statistics for one `(grid, band, regions, guard)`.
#[derive(Debug)]
pub struct IbpOperators {
    pub grid: Grid,
    pub rule: DealiasRule,
    pub region_params: RegionParams,
    pub guard: f64,
    u_pairs: PairList,
    v_pairs: PairList,
    /// near-resonant pairs left out of the integration by parts
    pub guard_stats_u: GuardStats,
    pub guard_stats_v: GuardStats,
    pub parallelism: Parallelism,
}

fn band_slots(grid: Grid, rule: DealiasRule) -> Vec<usize> {
    let half = (grid.n_points / 2) as i64;
    (0..grid.n_points).filter(|&i| grid.in_band(i, rule) && grid.mode(i) != -half).collect()
}

impl IbpOperators {
    pub fn new(grid: Grid, rule: DealiasRule, region_params: RegionParams, guard: f64) -> Self {
        let guard_stats_u = GuardStats::new();
        let guard_stats_v = GuardStats::new();
        let u_pairs = build(grid, rule, Branch::U, &region_params, guard, &guard_stats_u);
        let v_pairs = build(grid, rule, Branch::V, &region_params, guard, &guard_stats_v);
        IbpOperators {
            grid,
            rule,
            region_params,
            guard,
            u_pairs,
            v_pairs,
            guard_stats_u,
            guard_stats_v,
            parallelism: Parallelism::default(),
        }
    }

    /// Only the pair list of `branch`; the other branch's operators act as zero.
    ///
    /// The V list holds nearly every band pair, so large grids can afford only the U side.
    pub fn for_branch(grid: Grid, rule: DealiasRule, region_params: RegionParams, guard: f64, branch: Branch) -> Self {
        let guard_stats_u = GuardStats::new();
        let guard_stats_v = GuardStats::new();
        let empty = || PairList { offsets: vec![0; grid.n_points + 1], ..Default::default() };
        let (u_pairs, v_pairs) = match branch {
            Branch::U => (build(grid, rule, Branch::U, &region_params, guard, &guard_stats_u), empty()),
            Branch::V => (empty(), build(grid, rule, Branch::V, &region_params, guard, &guard_stats_v)),
        };
        IbpOperators {
            grid,
            rule,
            region_params,
            guard,
            u_pairs,
            v_pairs,
            guard_stats_u,
            guard_stats_v,
            parallelism: Parallelism::default(),
        }
    }

    pub fn with_parallelism(mut self, par: Parallelism) -> Self {
        self.parallelism = par;
        self
    }

    pub fn pair_count(&self, branch: Branch) -> usize {
        match branch {
            Branch::U => self.u_pairs.len(),
            Branch::V => self.v_pairs.len(),
        }
    }

    fn list(&self, branch: Branch) -> &PairList {
        match branch {
            Branch::U => &self.u_pairs,
            Branch::V => &self.v_pairs,
        }
    }
}

fn build(grid: Grid, rule: DealiasRule, branch: Branch, rp: &RegionParams, guard: f64, stats: &GuardStats) -> PairList {
    let n = grid.n_points;
    let band = band_slots(grid, rule);
    let kmax = grid.band_limit(rule).min((n / 2 - 1) as i64);
    let (region, phase) = match branch {
        Branch::U => (RegionId::U, PhaseId::PhiU1),
        Branch::V => (RegionId::V, PhaseId::PhiV1),
    };
    let mut list = PairList { offsets: vec![0; n + 1], ..Default::default() };
    let mut counts = vec![0usize; n];
    let mut rows: Vec<Vec<(u32, u32, f64, Complex64)>> = vec![Vec::new(); n];
    for &o in &band {
        let j = grid.mode(o);
        let xi = grid.freq(o);
        for &i1 in &band {
            let j1 = grid.mode(i1);
            let j2 = j - j1;
            if j2.abs() > kmax {
                continue;
            }
            let xi1 = grid.freq(i1);
            if !in_region(region, xi, xi1, rp) {
                continue;
            }
            let xi2 = j2 as f64 * grid.dxi();
            let phi = phase_raw(phase, xi, &[xi1, xi2]);
            if phi.abs() < guard {
                stats.hit();
                continue;
            }
            let plain = match branch {
                Branch::U => 1.0,
                Branch::V => xi,
            };
            rows[o].push((i1 as u32, grid.slot(j2) as u32, plain, Complex64::new(0.0, -plain / phi)));
        }
        counts[o] = rows[o].len();
    }
    for o in 0..n {
        list.offsets[o + 1] = list.offsets[o] + counts[o];
        for &(a, b, p, k) in &rows[o] {
            list.in1.push(a);
            list.in2.push(b);
            list.plain.push(p);
            list.ibp.push(k);
        }
    }
    list
}

/// `a*(xi) = conj a(-xi)`.
fn reflect_conj(a: &[Complex64], grid: Grid) -> Vec<Complex64> {
    (0..grid.n_points).map(|i| a[grid.slot(-grid.mode(i))].conj()).collect()
}

fn output_phase(branch: Branch, grid: Grid, t: f64) -> Vec<Complex64> {
    (0..grid.n_points)
        .map(|i| {
            let xi = grid.freq(i);
            match branch {
                Branch::U => Complex64::from_polar(1.0, t * xi * xi),
                Branch::V => Complex64::from_polar(1.0, -t * xi * xi * xi),
            }
        })
        .collect()
}

fn finish(mut v: Vec<Complex64>, scale: f64, phase: &[Complex64], grid: Grid, kind: FieldKind) -> SpectralField {
    for (x, p) in v.iter_mut().zip(phase) {
        *x *= p * scale;
    }
    SpectralField { grid, coeffs: v, kind }
}

/// Physical-frame inputs of one operator evaluation.
pub(crate) struct Frame {
    pub uhat: Vec<Complex64>,
    pub vhat: Vec<Complex64>,
    pub prod: Products,
}

impl Frame {
    pub fn new(state: &SpectralState, rule: DealiasRule) -> Frame {
        let (u, v) = state.physical_spectra();
        let prod = Products::compute(&u.coeffs, &v.coeffs, state.grid(), rule);
        Frame { uhat: u.coeffs, vhat: v.coeffs, prod }
    }
}

/// Boundary term at time `state.t`.
///
/// `B^u(xi) = c sum_{U_xi} e^{i t Phi^u_1} / (i Phi^u_1) u~_1 v~_2`,
/// `B^v(xi) = c sum_{V_xi} xi e^{i t Phi^v_1} / (i Phi^v_1) u~_1 u~*_2`.
pub fn apply_b(branch: Branch, state: &SpectralState, ops: &IbpOperators) -> SpectralField {
    let (u, v) = state.physical_spectra();
    apply_b_hat(branch, &u.coeffs, &v.coeffs, state.t, ops)
}

pub(crate) fn apply_b_hat(branch: Branch, uhat: &[Complex64], vhat: &[Complex64], t: f64, ops: &IbpOperators) -> SpectralField {
    let g = ops.grid;
    let c = g.conv_measure();
    let phase = output_phase(branch, g, t);
    match branch {
        Branch::U => finish(ops.u_pairs.sum(uhat, vhat, true, ops.parallelism), c, &phase, g, FieldKind::ULike),
        Branch::V => {
            let ustar = reflect_conj(uhat, g);
            finish(ops.v_pairs.sum(uhat, &ustar, true, ops.parallelism), c, &phase, g, FieldKind::ULike)
        }
    }
}

/// `N_j` of either branch at the state's time, in profile form.
///
/// u branch: `N_0` is the coupling sum off `U_xi`; `N_1 .. N_4` substitute `F(uv)`,
/// `F(|u|^2 u)`, `xi2 F(|u|^2)`, `xi2 F(v^2)` into the integrated-by-parts sum; `N_5` is
/// the cubic term. v branch: `N_0` is the `xi u u*` sum off `V_xi`; `N_1, N_2` substitute
/// into the first factor, `N_3, N_4` into the conjugated one; `N_5` is `xi F(v^2)`.
pub fn apply_n(j: usize, branch: Branch, state: &SpectralState, ops: &IbpOperators) -> Result<SpectralField, EvolveError> {
    if j > 5 {
        return Err(EvolveError::InvalidOperator { j, branch });
    }
    let f = Frame::new(state, ops.rule);
    Ok(apply_n_frame(j, branch, &f, state.t, ops))
}

pub(crate) fn apply_n_frame(j: usize, branch: Branch, f: &Frame, t: f64, ops: &IbpOperators) -> SpectralField {
    let g = ops.grid;
    let c = g.conv_measure();
    let par = ops.parallelism;
    let phase = output_phase(branch, g, t);
    let xi = g.freqs();
    let times_xi = |a: &[Complex64]| -> Vec<Complex64> { a.iter().zip(&xi).map(|(z, x)| z * x).collect() };
    let p = &f.prod;
    match branch {
        Branch::U => {
            let list = ops.list(Branch::U);
            let raw = match j {
                0 => {
                    let masked = list.sum(&f.uhat, &f.vhat, false, par);
                    p.uv.iter().zip(&masked).map(|(a, m)| a - m * c).collect::<Vec<_>>()
                }
                1 => scaled(list.sum(&p.uv, &f.vhat, true, par), c),
                2 => scaled(list.sum(&p.uuu, &f.vhat, true, par), c),
                3 => scaled(list.sum(&f.uhat, &times_xi(&p.uu), true, par), c),
                4 => scaled(list.sum(&f.uhat, &times_xi(&p.vv), true, par), c),
                _ => p.uuu.clone(),
            };
            finish(raw, 1.0, &phase, g, FieldKind::ULike)
        }
        Branch::V => {
            let list = ops.list(Branch::V);
            let ustar = reflect_conj(&f.uhat, g);
            let raw = match j {
                0 => {
                    let masked = list.sum(&f.uhat, &ustar, false, par);
                    times_xi(&p.uu).iter().zip(&masked).map(|(a, m)| a - m * c).collect::<Vec<_>>()
                }
                1 => scaled(list.sum(&p.uv, &ustar, true, par), c),
                2 => scaled(list.sum(&p.uuu, &ustar, true, par), c),
                3 => scaled(list.sum(&f.uhat, &reflect_conj(&p.uv, g), true, par), c),
                4 => scaled(list.sum(&f.uhat, &reflect_conj(&p.uuu, g), true, par), c),
                _ => times_xi(&p.vv),
            };
            finish(raw, 1.0, &phase, g, FieldKind::ULike)
        }
    }
}

fn scaled(mut v: Vec<Complex64>, c: f64) -> Vec<Complex64> {
    for x in v.iter_mut() {
        *x *= c;
    }
    v
}

/// Dense oracle for [`apply_n`]: direct lattice sums with the region and guard tested
/// on the fly, products by direct convolution on a doubled lattice. O(n^2) per call.
pub fn apply_n_direct(
    j: usize,
    branch: Branch,
    state: &SpectralState,
    region_params: &RegionParams,
    rule: DealiasRule,
    guard: f64,
) -> Result<SpectralField, EvolveError> {
    if j > 5 {
        return Err(EvolveError::InvalidOperator { j, branch });
    }
    let g = state.grid();
    let (u, v) = state.physical_spectra();
    let prod = direct_products(&u.coeffs, &v.coeffs, g, rule);
    let c = g.conv_measure();
    let n = g.n_points;
    let half = (n / 2) as i64;
    let kmax = g.band_limit(rule).min(half - 1);
    let t = state.t;
    let xi_of = |jj: i64| jj as f64 * g.dxi();
    let at = |a: &[Complex64], jj: i64| a[g.slot(jj)];
    let mut out = vec![ZERO; n];
    for o in 0..n {
        let jo = g.mode(o);
        if jo.abs() > kmax {
            continue;
        }
        let xi = xi_of(jo);
        let mut acc = ZERO;
        for j1 in -kmax..=kmax {
            let j2 = jo - j1;
            if j2.abs() > kmax {
                continue;
            }
            let (xi1, xi2) = (xi_of(j1), xi_of(j2));
            let (region, ph) = match branch {
                Branch::U => (RegionId::U, PhaseId::PhiU1),
                Branch::V => (RegionId::V, PhaseId::PhiV1),
            };
            let phi = phase_raw(ph, xi, &[xi1, xi2]);
            let inside = in_region(region, xi, xi1, region_params) && phi.abs() >= guard;
            let kern = Complex64::new(0.0, -1.0 / phi);
            let term = match (branch, j) {
                (Branch::U, 0) if !inside => at(&u.coeffs, j1) * at(&v.coeffs, j2),
                (Branch::U, 1) if inside => kern * at(&prod.uv, j1) * at(&v.coeffs, j2),
                (Branch::U, 2) if inside => kern * at(&prod.uuu, j1) * at(&v.coeffs, j2),
                (Branch::U, 3) if inside => kern * at(&u.coeffs, j1) * xi2 * at(&prod.uu, j2),
                (Branch::U, 4) if inside => kern * at(&u.coeffs, j1) * xi2 * at(&prod.vv, j2),
                (Branch::V, 0) if !inside => xi * at(&u.coeffs, j1) * at(&u.coeffs, -j2).conj(),
                (Branch::V, 1) if inside => xi * kern * at(&prod.uv, j1) * at(&u.coeffs, -j2).conj(),
                (Branch::V, 2) if inside => xi * kern * at(&prod.uuu, j1) * at(&u.coeffs, -j2).conj(),
                (Branch::V, 3) if inside => xi * kern * at(&u.coeffs, j1) * at(&prod.uv, -j2).conj(),
                (Branch::V, 4) if inside => xi * kern * at(&u.coeffs, j1) * at(&prod.uuu, -j2).conj(),
                _ => ZERO,
            };
            acc += term;
        }
        let val = match (branch, j) {
            (Branch::U, 5) => prod.uuu[o],
            (Branch::V, 5) => xi * prod.vv[o],
            _ => acc * c,
        };
        let ph = match branch {
            Branch::U => Complex64::from_polar(1.0, t * xi * xi),
            Branch::V => Complex64::from_polar(1.0, -t * xi * xi * xi),
        };
        out[o] = val * ph;
    }
    Ok(SpectralField { grid: g, coeffs: out, kind: FieldKind::ULike })
}

/// Products by direct convolution on a doubled lattice, truncated to the band.
pub(crate) fn direct_products(uhat: &[Complex64], vhat: &[Complex64], g: Grid, rule: DealiasRule) -> Products {
    let big = Grid { n_points: 2 * g.n_points, length: g.length };
    let kmax = g.band_limit(rule).min((g.n_points / 2 - 1) as i64);
    let lift = |a: &[Complex64]| -> Vec<Complex64> {
        let mut b = vec![ZERO; big.n_points];
        for i in 0..g.n_points {
            let j = g.mode(i);
            if j.abs() <= kmax {
                b[big.slot(j)] = a[i];
            }
        }
        b
    };
    let (u, v) = (lift(uhat), lift(vhat));
    let ubar = reflect_conj(&u, big);
    let conv = |a: &[Complex64], b: &[Complex64]| direct_convolution(a, b, big, DealiasRule::None);
    let uu = conv(&u, &ubar);
    let drop = |a: Vec<Complex64>| -> Vec<Complex64> {
        (0..g.n_points)
            .map(|i| {
                let j = g.mode(i);
                if j.abs() <= kmax {
                    a[big.slot(j)]
                } else {
                    ZERO
                }
            })
            .collect()
    };
    Products { uv: drop(conv(&u, &v)), uuu: drop(conv(&uu, &u)), vv: drop(conv(&v, &v)), uu: drop(uu) }
}

/// Right-hand side of the `u` equation, `u~_t`, rebuilt from the N operators.
/// Used to check the algebra of the integrated-by-parts formulation.
pub(crate) fn ibp_u_rhs(f: &Frame, t: f64, p: &CouplingParams, ops: &IbpOperators) -> Vec<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    let n: Vec<SpectralField> = (0..6).map(|j| apply_n_frame(j, Branch::U, f, t, ops)).collect();
    (0..ops.grid.n_points)
        .map(|q| {
            -i * p.alpha
                * (n[0].coeffs[q] + i * p.alpha * n[1].coeffs[q] + i * p.beta * n[2].coeffs[q]
                    - i * p.gamma * n[3].coeffs[q]
                    + i * 0.5 * p.kdv * n[4].coeffs[q])
                - i * p.beta * n[5].coeffs[q]
        })
        .collect()
}

/// `w_t` of the `v` formulation, `w = v~ - i gamma B^v`.
pub(crate) fn ibp_v_rhs(f: &Frame, t: f64, p: &CouplingParams, ops: &IbpOperators) -> Vec<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    let n: Vec<SpectralField> = (0..6).map(|j| apply_n_frame(j, Branch::V, f, t, ops)).collect();
    (0..ops.grid.n_points)
        .map(|q| {
            i * p.gamma
                * (n[0].coeffs[q] + i * p.alpha * n[1].coeffs[q] + i * p.beta * n[2].coeffs[q]
                    - i * p.alpha * n[3].coeffs[q]
                    - i * p.beta * n[4].coeffs[q])
                - i * 0.5 * p.kdv * n[5].coeffs[q]
        })
        .collect()
}
