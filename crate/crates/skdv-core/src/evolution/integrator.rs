//! Integrating-factor RK4 on profiles for all three formulations.

use super::conservation::functionals;
use super::operators::{apply_b_hat, ibp_u_rhs, ibp_v_rhs, Frame, IbpOperators, Branch};
use super::products::Products;
use super::{CouplingParams, EvolveConfig, EvolveError, EvolveMode, SpectralState};
use crate::spectral::{sobolev_norm, DealiasRule, FieldKind, Grid, SpectralField};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::cell::Cell;

type C = Complex64;
const I: C = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t: f64,
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
    pub norm_hk: f64,
    pub norm_hs: f64,
}

impl Diagnostics {
    pub fn of(state: &SpectralState, params: &CouplingParams, k: f64, s: f64) -> Diagnostics {
        let f = functionals(state, params);
        Diagnostics {
            t: state.t,
            mass: f.mass,
            momentum: f.momentum,
            energy: f.energy,
            norm_hk: sobolev_norm(&state.u, k),
            norm_hs: sobolev_norm(&state.v, s),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub mode: EvolveMode,
    pub times: Vec<f64>,
    pub states: Vec<SpectralState>,
    pub diagnostics: Vec<Diagnostics>,
    /// near-resonant pairs excluded from the `U_xi` / `V_xi` sums
    pub guard_u: u64,
    pub guard_v: u64,
    /// largest Hermitian defect of a reconstructed `v~` before projection
    pub max_hermitian_defect: f64,
    pub substeps: u64,
    /// state at the end of the run, recorded or not
    pub final_state: Option<SpectralState>,
}

fn phase_u(grid: Grid, t: f64) -> Vec<C> {
    (0..grid.n_points)
        .map(|i| {
            let x = grid.freq(i);
            C::from_polar(1.0, t * x * x)
        })
        .collect()
}

fn phase_v(grid: Grid, t: f64) -> Vec<C> {
    (0..grid.n_points)
        .map(|i| {
            let x = grid.freq(i);
            C::from_polar(1.0, -t * x * x * x)
        })
        .collect()
}

/// Physical-frame spectra from profiles at time `t`.
fn to_hat(u: &[C], v: &[C], grid: Grid, t: f64) -> (Vec<C>, Vec<C>) {
    let pu = phase_u(grid, t);
    let pv = phase_v(grid, t);
    let uh = u.iter().zip(&pu).map(|(a, p)| a * p.conj()).collect();
    let vh = v.iter().zip(&pv).map(|(a, p)| a * p.conj()).collect();
    (uh, vh)
}

fn classical_u(prod: &Products, p: &CouplingParams, pu: &[C]) -> Vec<C> {
    prod.uv.iter().zip(&prod.uuu).zip(pu).map(|((a, b), ph)| -I * (a * p.alpha + b * p.beta) * ph).collect()
}

fn classical_v(prod: &Products, p: &CouplingParams, pv: &[C], grid: Grid) -> Vec<C> {
    let mut out: Vec<C> = (0..grid.n_points)
        .map(|i| {
            let xi = grid.freq(i);
            (I * p.gamma * xi * prod.uu[i] - I * 0.5 * p.kdv * xi * prod.vv[i]) * pv[i]
        })
        .collect();
    hermitian(&mut out);
    out
}

fn hermitian(c: &mut [C]) {
    let n = c.len();
    c[0].im = 0.0;
    c[n / 2].im = 0.0;
    for i in 1..n / 2 {
        let m = (c[i] + c[n - i].conj()) * 0.5;
        c[i] = m;
        c[n - i] = m.conj();
    }
}

fn hermitian_defect(c: &[C]) -> f64 {
    let f = SpectralField { grid: Grid { n_points: c.len(), length: 1.0 }, coeffs: c.to_vec(), kind: FieldKind::VLike };
    f.hermitian_defect()
}

/// `(u~_t, v~_t)` of the classical profile equations at `state.t`, band-limited.
pub fn rhs_classical(state: &SpectralState, params: &CouplingParams, rule: DealiasRule) -> Result<SpectralState, EvolveError> {
    let g = state.grid();
    let (uh, vh) = to_hat(&state.u.coeffs, &state.v.coeffs, g, state.t);
    let prod = Products::compute(&uh, &vh, g, rule);
    let du = classical_u(&prod, params, &phase_u(g, state.t));
    let dv = classical_v(&prod, params, &phase_v(g, state.t), g);
    if du.iter().chain(&dv).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(EvolveError::NonFinite { t: state.t, record: Box::new(empty_record(EvolveMode::Classical)) });
    }
    Ok(SpectralState {
        t: state.t,
        u: SpectralField { grid: g, coeffs: du, kind: FieldKind::ULike },
        v: SpectralField { grid: g, coeffs: dv, kind: FieldKind::VLike },
    })
}

fn empty_record(mode: EvolveMode) -> RunRecord {
    RunRecord {
        mode,
        times: vec![],
        states: vec![],
        diagnostics: vec![],
        guard_u: 0,
        guard_v: 0,
        max_hermitian_defect: 0.0,
        substeps: 0,
        final_state: None,
    }
}

/// The time-stepped unknowns and how to get profiles back from them.
struct Stepper<'a> {
    mode: EvolveMode,
    grid: Grid,
    rule: DealiasRule,
    params: CouplingParams,
    ops: Option<&'a IbpOperators>,
    defect: Cell<f64>,
}

impl<'a> Stepper<'a> {
    /// Profiles from unknowns.
    fn profiles(&self, t: f64, a: &[C], b: &[C]) -> (Vec<C>, Vec<C>) {
        match self.mode {
            EvolveMode::Classical => (a.to_vec(), b.to_vec()),
            EvolveMode::IbpU => {
                let ops = self.ops.expect("ibp mode has operators");
                let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
                let pu = phase_u(self.grid, t);
                let pv = phase_v(self.grid, t);
                let vh: Vec<C> = b.iter().zip(&pv).map(|(x, p)| x * p.conj()).collect();
                let mut u = a.to_vec();
                for _ in 0..200 {
                    let uh: Vec<C> = u.iter().zip(&pu).map(|(x, p)| x * p.conj()).collect();
                    let bu = apply_b_hat(Branch::U, &uh, &vh, t, ops);
                    let next: Vec<C> = a.iter().zip(&bu.coeffs).map(|(w, bb)| w - I * self.params.alpha * bb).collect();
                    let d = next.iter().zip(&u).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
                    u = next;
                    if d <= 1e-14 * scale {
                        break;
                    }
                }
                (u, b.to_vec())
            }
            EvolveMode::IbpV => {
                let ops = self.ops.expect("ibp mode has operators");
                let pu = phase_u(self.grid, t);
                let uh: Vec<C> = a.iter().zip(&pu).map(|(x, p)| x * p.conj()).collect();
                let bv = apply_b_hat(Branch::V, &uh, &[], t, ops);
                let mut v: Vec<C> = b.iter().zip(&bv.coeffs).map(|(w, bb)| w + I * self.params.gamma * bb).collect();
                let d = hermitian_defect(&v);
                if d > self.defect.get() {
                    self.defect.set(d);
                }
                hermitian(&mut v);
                (a.to_vec(), v)
            }
        }
    }

    /// Unknowns from profiles.
    fn unknowns(&self, st: &SpectralState) -> (Vec<C>, Vec<C>) {
        let (u, v) = (st.u.coeffs.clone(), st.v.coeffs.clone());
        match self.mode {
            EvolveMode::Classical => (u, v),
            EvolveMode::IbpU => {
                let (uh, vh) = to_hat(&u, &v, self.grid, st.t);
                let bu = apply_b_hat(Branch::U, &uh, &vh, st.t, self.ops.expect("operators"));
                (u.iter().zip(&bu.coeffs).map(|(x, bb)| x + I * self.params.alpha * bb).collect(), v)
            }
            EvolveMode::IbpV => {
                let (uh, _) = to_hat(&u, &v, self.grid, st.t);
                let bv = apply_b_hat(Branch::V, &uh, &[], st.t, self.ops.expect("operators"));
                let w = v.iter().zip(&bv.coeffs).map(|(x, bb)| x - I * self.params.gamma * bb).collect();
                (u, w)
            }
        }
    }

    fn deriv(&self, t: f64, a: &[C], b: &[C]) -> (Vec<C>, Vec<C>) {
        let (u, v) = self.profiles(t, a, b);
        let g = self.grid;
        let (uh, vh) = to_hat(&u, &v, g, t);
        let prod = Products::compute(&uh, &vh, g, self.rule);
        match self.mode {
            EvolveMode::Classical => {
                (classical_u(&prod, &self.params, &phase_u(g, t)), classical_v(&prod, &self.params, &phase_v(g, t), g))
            }
            EvolveMode::IbpU => {
                let ops = self.ops.expect("operators");
                let dv = classical_v(&prod, &self.params, &phase_v(g, t), g);
                let f = Frame { uhat: uh, vhat: vh, prod };
                (ibp_u_rhs(&f, t, &self.params, ops), dv)
            }
            EvolveMode::IbpV => {
                let ops = self.ops.expect("operators");
                let du = classical_u(&prod, &self.params, &phase_u(g, t));
                let f = Frame { uhat: uh, vhat: vh, prod };
                (du, ibp_v_rhs(&f, t, &self.params, ops))
            }
        }
    }

    fn rk4(&self, t: f64, h: f64, a: &[C], b: &[C]) -> (Vec<C>, Vec<C>) {
        let comb = |x: &[C], k: &[C], c: f64| -> Vec<C> { x.iter().zip(k).map(|(p, q)| p + q * c).collect() };
        let (k1a, k1b) = self.deriv(t, a, b);
        let (k2a, k2b) = self.deriv(t + 0.5 * h, &comb(a, &k1a, 0.5 * h), &comb(b, &k1b, 0.5 * h));
        let (k3a, k3b) = self.deriv(t + 0.5 * h, &comb(a, &k2a, 0.5 * h), &comb(b, &k2b, 0.5 * h));
        let (k4a, k4b) = self.deriv(t + h, &comb(a, &k3a, h), &comb(b, &k3b, h));
        let fin = |x: &[C], k1: &[C], k2: &[C], k3: &[C], k4: &[C]| -> Vec<C> {
            (0..x.len()).map(|i| x[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0)).collect()
        };
        (fin(a, &k1a, &k2a, &k3a, &k4a), fin(b, &k1b, &k2b, &k3b, &k4b))
    }
}

fn sup_bound(c: &[C], grid: Grid) -> f64 {
    c.iter().map(|z| z.norm()).sum::<f64>() * grid.conv_measure()
}

/// Number of substeps the stability bound requires for an output step `dt`.
fn substeps_for(u: &[C], v: &[C], grid: Grid, rule: DealiasRule, dt: f64, c: f64) -> u64 {
    let ximax = grid.band_limit(rule).min((grid.n_points / 2) as i64) as f64 * grid.dxi();
    let amp = sup_bound(u, grid).max(sup_bound(v, grid));
    if amp == 0.0 || ximax == 0.0 {
        return 1;
    }
    let bound = c / (ximax * amp);
    (dt.abs() / bound).ceil().max(1.0) as u64
}

/// One classical RK4 step of size `dt` (negative allowed) from `state`.
pub fn step(state: &SpectralState, dt: f64, config: &EvolveConfig, params: &CouplingParams) -> Result<SpectralState, EvolveError> {
    let st = Stepper {
        mode: EvolveMode::Classical,
        grid: state.grid(),
        rule: config.dealias_rule,
        params: *params,
        ops: None,
        defect: Cell::new(0.0),
    };
    let (a, b) = st.rk4(state.t, dt, &state.u.coeffs, &state.v.coeffs);
    let g = state.grid();
    Ok(SpectralState {
        t: state.t + dt,
        u: SpectralField { grid: g, coeffs: a, kind: FieldKind::ULike },
        v: SpectralField { grid: g, coeffs: b, kind: FieldKind::VLike },
    })
}

/// Evolve `initial` (profiles at `initial.t`) to `initial.t + t_end`.
pub fn evolve(initial: &SpectralState, config: &EvolveConfig, params: &CouplingParams) -> Result<RunRecord, EvolveError> {
    config.validate().map_err(EvolveError::Config)?;
    params.validate().map_err(EvolveError::Config)?;
    if !initial.is_dealiased(config.dealias_rule) {
        return Err(EvolveError::Config("initial state is not dealiased".into()));
    }
    let g = initial.grid();
    let ops_store = match config.mode {
        EvolveMode::Classical => None,
        _ => Some(
            IbpOperators::new(g, config.dealias_rule, config.region_params, config.guard)
                .with_parallelism(config.parallelism),
        ),
    };
    let st = Stepper {
        mode: config.mode,
        grid: g,
        rule: config.dealias_rule,
        params: *params,
        ops: ops_store.as_ref(),
        defect: Cell::new(0.0),
    };
    let mut rec = empty_record(config.mode);
    if let Some(ops) = &ops_store {
        rec.guard_u = ops.guard_stats_u.count();
        rec.guard_v = ops.guard_stats_v.count();
    }
    let d0 = Diagnostics::of(initial, params, config.k, config.s);
    rec.times.push(initial.t);
    rec.states.push(initial.clone());
    rec.diagnostics.push(d0);

    let n_steps = (config.t_end / config.dt).round().max(1.0) as usize;
    let (mut a, mut b) = st.unknowns(initial);
    let mut t = initial.t;
    let mut current = initial.clone();
    for k in 1..=n_steps {
        let m = substeps_for(&current.u.coeffs, &current.v.coeffs, g, config.dealias_rule, config.dt, config.stability_c);
        let h = config.dt / m as f64;
        for q in 0..m {
            let tq = initial.t + (k - 1) as f64 * config.dt + q as f64 * h;
            let (na, nb) = st.rk4(tq, h, &a, &b);
            a = na;
            b = nb;
        }
        rec.substeps += m;
        t = initial.t + k as f64 * config.dt;
        let (u, v) = st.profiles(t, &a, &b);
        current = SpectralState {
            t,
            u: SpectralField { grid: g, coeffs: u, kind: FieldKind::ULike },
            v: SpectralField { grid: g, coeffs: v, kind: FieldKind::VLike },
        };
        let finite = current.u.coeffs.iter().chain(&current.v.coeffs).all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            rec.max_hermitian_defect = st.defect.get();
            return Err(EvolveError::NonFinite { t, record: Box::new(rec) });
        }
        let hk = sobolev_norm(&current.u, config.k);
        let hs = sobolev_norm(&current.v, config.s);
        if (d0.norm_hk > 0.0 && hk > 1e8 * d0.norm_hk) || (d0.norm_hs > 0.0 && hs > 1e8 * d0.norm_hs) {
            rec.max_hermitian_defect = st.defect.get();
            return Err(EvolveError::BlowUp { t, record: Box::new(rec) });
        }
        if k % config.record_stride == 0 {
            rec.times.push(t);
            rec.diagnostics.push(Diagnostics::of(&current, params, config.k, config.s));
            rec.states.push(current.clone());
        }
    }
    let _ = t;
    rec.final_state = Some(current);
    rec.max_hermitian_defect = st.defect.get();
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    #[test]
    fn zero_state_zero_rhs() {
        let g = Grid::new(32, 10.0).unwrap();
        let s = SpectralState::new(0.3, SpectralField::zeros(g, FieldKind::ULike), SpectralField::zeros(g, FieldKind::VLike)).unwrap();
        let d = rhs_classical(&s, &CouplingParams::default(), DealiasRule::TwoThirds).unwrap();
        assert!(d.u.is_zero() && d.v.is_zero());
    }
}
