//! Multiplier catalog: one evaluable estimate per multilinear bound.
//!
//! Frequencies are stored as a full tuple `x = [xi, x_1, .., x_m]` with the output first
//! and the convolution constraint `x_0 = x_1 + .. + x_m`. Conjugated slots carry their sign
//! inside the phase polynomial, as in [`crate::resonance::phase_raw`].

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::resonance::{phase_raw, PhaseId, RegionParams, SEPARATION};
use crate::spectral::Regularity;

use super::FreError;

/// Linear form on the frequency tuple.
pub type Form = Vec<f64>;

/// Weight or multiplier on the frequency tuple.
pub type WeightFn = Arc<dyn Fn(&[f64], &Regularity) -> f64 + Send + Sync>;

/// Region builder, parametrized by the cut-offs.
pub type RegionFn = Arc<dyn Fn(&RegionParams) -> Region + Send + Sync>;

#[inline]
pub fn jp(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

fn dot(a: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(a, x)| a * x).sum()
}

/// Elementary region constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum Clause {
    /// `|a.x| < c |b.x|`
    Ratio { a: Form, c: f64, b: Form },
    /// `|a.x| > c`
    Above { a: Form, c: f64 },
}

impl Clause {
    pub fn holds(&self, x: &[f64]) -> bool {
        match self {
            Clause::Ratio { a, c, b } => dot(a, x).abs() < c * dot(b, x).abs(),
            Clause::Above { a, c } => dot(a, x).abs() > *c,
        }
    }

    /// Parameters `t` where the clause can switch along `p + t q`.
    fn switches(&self, p: &[f64], q: &[f64], out: &mut Vec<f64>) {
        let mut lin = |a0: f64, a1: f64| {
            if a1 != 0.0 {
                out.push(-a0 / a1);
            }
        };
        match self {
            Clause::Ratio { a, c, b } => {
                let (a0, a1, b0, b1) = (dot(a, p), dot(a, q), dot(b, p), dot(b, q));
                lin(a0 - c * b0, a1 - c * b1);
                lin(a0 + c * b0, a1 + c * b1);
            }
            Clause::Above { a, c } => {
                let (a0, a1) = (dot(a, p), dot(a, q));
                lin(a0 - c, a1);
                lin(a0 + c, a1);
            }
        }
    }
}

/// Conjunction of clauses minus a union of excluded conjunctions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Region {
    pub all: Vec<Clause>,
    pub none_of: Vec<Vec<Clause>>,
}

impl Region {
    pub fn everywhere() -> Self {
        Region::default()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.all.iter().all(|c| c.holds(x)) && !self.none_of.iter().any(|g| g.iter().all(|c| c.holds(x)))
    }

    pub fn switches(&self, p: &[f64], q: &[f64], out: &mut Vec<f64>) {
        for c in self.all.iter().chain(self.none_of.iter().flatten()) {
            c.switches(p, q, out);
        }
    }

    pub fn and(mut self, other: Region) -> Region {
        self.all.extend(other.all);
        self.none_of.extend(other.none_of);
        self
    }
}

/// `U`: the input `inp` is much smaller than the output `out`, which is above `1/delta_u`.
pub fn u_clauses(out: &Form, inp: &Form, p: &RegionParams) -> Vec<Clause> {
    vec![
        Clause::Ratio { a: inp.clone(), c: 1.0 / SEPARATION, b: out.clone() },
        Clause::Above { a: out.clone(), c: 1.0 / p.delta_u },
    ]
}

/// `V`: the input `inp` is above `1/delta_v` and not much larger than the output.
pub fn v_clauses(out: &Form, inp: &Form, p: &RegionParams) -> Vec<Clause> {
    vec![
        Clause::Above { a: inp.clone(), c: 1.0 / p.delta_v },
        Clause::Ratio { a: inp.clone(), c: SEPARATION, b: out.clone() },
    ]
}

/// Phase written as `sum_j c1 x_j + c2 x_j^2 + c3 x_j^3`, so its restriction to a line is an explicit cubic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparablePhase {
    pub coeffs: Vec<[f64; 3]>,
}

impl SeparablePhase {
    /// The catalog phase `id` on the tuple `[xi, inputs..]`.
    pub fn from_id(id: PhaseId) -> Self {
        use PhaseId::*;
        let (q, c) = ([0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
        let neg = |v: [f64; 3]| [-v[0], -v[1], -v[2]];
        let coeffs = match id {
            PhiU1 => vec![q, neg(q), c],
            PhiU2 | NlsCubic => vec![q, neg(q), q, neg(q)],
            PhiV1 => vec![neg(c), neg(q), q],
            PhiV2 => vec![neg(c), c, c],
            PsiU1 | PsiU4 => vec![q, neg(q), c, c],
            PsiU2 => vec![q, neg(q), q, neg(q), c],
            PsiU3 => vec![q, neg(q), neg(q), q],
            PsiV1 => vec![neg(c), neg(q), c, q],
            PsiV3 => vec![neg(c), neg(q), q, c],
            PsiV2 | PsiV4 => vec![neg(c), neg(q), q, neg(q), q],
        };
        SeparablePhase { coeffs }
    }

    /// Single linear term `c x_slot` on a tuple of `n` frequencies.
    pub fn linear(n: usize, slot: usize, c: f64) -> Self {
        let mut coeffs = vec![[0.0; 3]; n];
        coeffs[slot][0] = c;
        SeparablePhase { coeffs }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(c, &x)| x * (c[0] + x * (c[1] + x * c[2]))).sum()
    }

    /// Coefficients `[a0, a1, a2, a3]` of `t -> phase(p + t q)`.
    pub fn along(&self, p: &[f64], q: &[f64]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for ((c, &a), &b) in self.coeffs.iter().zip(p).zip(q) {
            // c1 (a + bt) + c2 (a + bt)^2 + c3 (a + bt)^3
            out[0] += a * (c[0] + a * (c[1] + a * c[2]));
            out[1] += b * (c[0] + 2.0 * c[1] * a + 3.0 * c[2] * a * a);
            out[2] += b * b * (c[1] + 3.0 * c[2] * a);
            out[3] += b * b * b * c[2];
        }
        out
    }
}

/// `a k + b s + c > 0` (or `>= 0` when not strict).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub strict: bool,
}

impl HalfPlane {
    pub const fn gt(a: f64, b: f64, c: f64) -> Self {
        HalfPlane { a, b, c, strict: true }
    }
    pub const fn ge(a: f64, b: f64, c: f64) -> Self {
        HalfPlane { a, b, c, strict: false }
    }
    pub fn value(&self, k: f64, s: f64) -> f64 {
        self.a * k + self.b * s + self.c
    }
    pub fn holds(&self, k: f64, s: f64) -> bool {
        let v = self.value(k, s);
        if self.strict {
            v > 0.0
        } else {
            v >= 0.0
        }
    }
}

impl fmt::Display for HalfPlane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}k {:+}s {:+} {} 0", self.a, self.b, self.c, if self.strict { ">" } else { ">=" })
    }
}

/// The two-sided criterion for three or more inputs: sup over the slots in `fixed` of the
/// `first` weight, and sup over the complement of the `second` weight.
#[derive(Clone)]
pub struct Split {
    pub name: &'static str,
    pub fixed: Vec<usize>,
    pub first: WeightFn,
    pub second: WeightFn,
    /// Extra restriction to the case of the proof this split is meant for.
    pub case: Option<RegionFn>,
}

#[derive(Clone)]
pub enum Criterion {
    /// Every listed slot fixed in turn; the estimate is the largest sup.
    EachSlot(Vec<usize>),
    /// No modulation window: a plain sup of the weighted integral (boundary terms).
    Unwindowed(Vec<usize>),
    /// Interpolation between two fixed-slot sets.
    TwoSided(Vec<Split>),
}

/// Claimed bound `<alpha>^alpha M^m` for the windowed value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Claim {
    pub alpha: f64,
    pub m: f64,
}

/// Immutable, numerically evaluable estimate.
#[derive(Clone)]
pub struct EstimateSpec {
    pub id: String,
    pub summary: String,
    pub variables: Vec<&'static str>,
    pub phase_id: Option<PhaseId>,
    pub phase: SeparablePhase,
    pub region: RegionFn,
    pub region_text: &'static str,
    /// Unsquared multiplier including the Sobolev weights; the windowed integrand is its square.
    pub multiplier: WeightFn,
    pub multiplier_text: &'static str,
    pub validity: Vec<HalfPlane>,
    /// `eps < min(a k + b s + c)` over these triples.
    pub eps_bounds: Vec<(f64, f64, f64)>,
    /// The gain bound is attained (a fixed gain rather than an open range).
    pub eps_inclusive: bool,
    pub criterion: Criterion,
    pub claim: Claim,
}

impl fmt::Debug for EstimateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EstimateSpec").field("id", &self.id).field("variables", &self.variables).finish_non_exhaustive()
    }
}

impl EstimateSpec {
    /// Number of inputs `m`.
    pub fn arity(&self) -> usize {
        self.variables.len() - 1
    }

    pub fn eps_sup(&self, k: f64, s: f64) -> f64 {
        self.eps_bounds.iter().map(|&(a, b, c)| a * k + b * s + c).fold(f64::INFINITY, f64::min)
    }

    /// `(k, s)` satisfies every validity half-plane.
    pub fn valid_at(&self, k: f64, s: f64) -> bool {
        self.validity.iter().all(|h| h.holds(k, s))
    }

    /// Validity plus the gain bound.
    pub fn in_range(&self, r: &Regularity) -> bool {
        let sup = self.eps_sup(r.k, r.s);
        self.valid_at(r.k, r.s) && if self.eps_inclusive { r.eps <= sup } else { r.eps < sup }
    }

    /// Squared multiplier: the integrand of the single-slot criteria.
    pub fn weight(&self, x: &[f64], r: &Regularity) -> f64 {
        let m = (self.multiplier)(x, r);
        m * m
    }

    pub fn fixed_options(&self) -> Vec<Vec<usize>> {
        match &self.criterion {
            Criterion::EachSlot(v) | Criterion::Unwindowed(v) => v.iter().map(|&j| vec![j]).collect(),
            Criterion::TwoSided(splits) => splits.iter().map(|s| s.fixed.clone()).collect(),
        }
    }

    pub fn windowed(&self) -> bool {
        !matches!(self.criterion, Criterion::Unwindowed(_))
    }

    /// User-defined estimate with a plain weight as its integrand.
    pub fn custom(
        id: &str,
        variables: Vec<&'static str>,
        phase: SeparablePhase,
        weight: WeightFn,
        region: Option<RegionFn>,
        fixed: Vec<usize>,
    ) -> Result<Self, FreError> {
        if variables.len() < 3 || phase.coeffs.len() != variables.len() {
            return Err(FreError::Invalid("custom estimate needs at least two inputs and one phase term per frequency".into()));
        }
        let w = weight.clone();
        Ok(EstimateSpec {
            id: id.to_string(),
            summary: "custom estimate".into(),
            variables,
            phase_id: None,
            phase,
            region: region.unwrap_or_else(|| Arc::new(|_: &RegionParams| Region::everywhere())),
            region_text: "custom",
            multiplier: Arc::new(move |x: &[f64], r: &Regularity| w(x, r).max(0.0).sqrt()),
            multiplier_text: "custom",
            validity: vec![],
            eps_bounds: vec![],
            eps_inclusive: false,
            criterion: Criterion::EachSlot(fixed),
            claim: Claim { alpha: 0.0, m: 1.0 },
        })
    }
}

/// JSON-friendly summary of one entry.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogSummary {
    pub id: String,
    pub summary: String,
    pub variables: Vec<&'static str>,
    pub phase: Option<&'static str>,
    pub region: &'static str,
    pub multiplier: &'static str,
    pub validity: Vec<String>,
    pub eps_bounds: Vec<(f64, f64, f64)>,
    pub criterion: String,
    pub claim: Claim,
}

impl From<&EstimateSpec> for CatalogSummary {
    fn from(e: &EstimateSpec) -> Self {
        let criterion = match &e.criterion {
            Criterion::EachSlot(v) => format!("each slot fixed in turn: {v:?}"),
            Criterion::Unwindowed(v) => format!("unwindowed sup over {v:?}"),
            Criterion::TwoSided(s) => s.iter().map(|s| format!("case {} fixes {:?}", s.name, s.fixed)).collect::<Vec<_>>().join("; "),
        };
        CatalogSummary {
            id: e.id.clone(),
            summary: e.summary.clone(),
            variables: e.variables.clone(),
            phase: e.phase_id.map(|p| p.key()),
            region: e.region_text,
            multiplier: e.multiplier_text,
            validity: e.validity.iter().map(|h| h.to_string()).collect(),
            eps_bounds: e.eps_bounds.clone(),
            criterion,
            claim: e.claim,
        }
    }
}

pub const CATALOG_IDS: [&str; 15] = [
    "lem:1",
    "lem:probU",
    "lem:2",
    "lem:probV",
    "lem:3",
    "lem:4",
    "lem:5",
    "lem:6",
    "lem:7",
    "lem:8",
    "lem:bdryHs-u",
    "lem:bdryHs-v",
    "lem:smooth_nls",
    "lem:est_dxv2-high",
    "lem:N0B",
];

fn unit(n: usize, i: usize) -> Form {
    let mut f = vec![0.0; n];
    f[i] = 1.0;
    f
}

fn sum_of(n: usize, idx: &[usize]) -> Form {
    let mut f = vec![0.0; n];
    for &i in idx {
        f[i] = 1.0;
    }
    f
}

fn region_u(n: usize, out: Form, inp: Form) -> RegionFn {
    let _ = n;
    Arc::new(move |p: &RegionParams| Region { all: u_clauses(&out, &inp, p), none_of: vec![] })
}

fn region_u_complement(out: Form, inp: Form) -> RegionFn {
    Arc::new(move |p: &RegionParams| Region { all: vec![], none_of: vec![u_clauses(&out, &inp, p)] })
}

fn region_v(out: Form, inp: Form) -> RegionFn {
    Arc::new(move |p: &RegionParams| Region { all: v_clauses(&out, &inp, p), none_of: vec![] })
}

fn region_v_complement(out: Form, inp: Form) -> RegionFn {
    Arc::new(move |p: &RegionParams| Region { all: vec![], none_of: vec![v_clauses(&out, &inp, p)] })
}

fn w(f: impl Fn(&[f64], &Regularity) -> f64 + Send + Sync + 'static) -> WeightFn {
    Arc::new(f)
}

const FREQUAD: Claim = Claim { alpha: 1.0, m: 1.0 };
const TWO_SIDED: Claim = Claim { alpha: 0.0, m: 1.0 };
const BOUNDED: Claim = Claim { alpha: 0.0, m: 0.0 };

/// Half-planes of the admissible region: `k >= 0`, `s > -3/4`, `s < 4k`, `-2 < k - s < 3`.
pub fn admissible_half_planes() -> Vec<HalfPlane> {
    vec![
        HalfPlane::ge(1.0, 0.0, 0.0),
        HalfPlane::gt(0.0, 1.0, 0.75),
        HalfPlane::gt(4.0, -1.0, 0.0),
        HalfPlane::gt(1.0, -1.0, 2.0),
        HalfPlane::gt(-1.0, 1.0, 3.0),
    ]
}

/// Conditions of the two cited bilinear estimates the regimes also rely on.
pub fn cited_half_planes(id: &str) -> Option<Vec<HalfPlane>> {
    match id {
        // KdV bilinear estimate
        "est_kdv" => Some(vec![HalfPlane::gt(0.0, 1.0, 0.75)]),
        // cubic NLS estimate
        "est_nls" => Some(vec![HalfPlane::ge(1.0, 0.0, 0.0)]),
        _ => None,
    }
}

pub fn catalog_lookup(id: &str) -> Result<EstimateSpec, FreError> {
    use PhaseId::*;
    let e = |n, i| unit(n, i);
    let u_mult = w(|x, r| jp(x[0]).powf(r.k + r.eps) / (jp(x[1]).powf(r.k) * jp(x[2]).powf(r.s)));
    let v_mult = w(|x, r| x[0].abs() * jp(x[0]).powf(r.s + r.eps) / (jp(x[1]).powf(r.k) * jp(x[2]).powf(r.k)));
    let spec = |id: &str,
                summary: &str,
                variables: Vec<&'static str>,
                phase_id: PhaseId,
                region: RegionFn,
                region_text: &'static str,
                multiplier: WeightFn,
                multiplier_text: &'static str,
                validity: Vec<HalfPlane>,
                eps_bounds: Vec<(f64, f64, f64)>,
                criterion: Criterion,
                claim: Claim| EstimateSpec {
        id: id.to_string(),
        summary: summary.to_string(),
        variables,
        phase_id: Some(phase_id),
        phase: SeparablePhase::from_id(phase_id),
        region,
        region_text,
        multiplier,
        multiplier_text,
        validity,
        eps_bounds,
        eps_inclusive: false,
        criterion,
        claim,
    };
    let bi = vec!["xi", "xi1", "xi2"];
    let each = || Criterion::EachSlot(vec![0, 1, 2]);
    let sym = |name: &'static str, fixed: Vec<usize>, m: WeightFn| Split { name, fixed, first: m.clone(), second: m, case: None };
    let out = match id {
        "lem:1" => spec(
            id,
            "coupling term u v off the resonant set U, gain in X^{k+eps}",
            bi,
            PhiU1,
            region_u_complement(e(3, 0), e(3, 1)),
            "complement of U (xi1 not much smaller than xi, or |xi| <= 1/delta_u)",
            u_mult,
            "<xi>^{k+eps} / (<xi1>^k <xi2>^s)",
            vec![HalfPlane::gt(0.0, 1.0, 1.0)],
            vec![(0.0, 0.5, 0.5), (0.0, 0.0, 0.5)],
            each(),
            FREQUAD,
        ),
        "lem:probU" => spec(
            id,
            "coupling term u v on the resonant set U",
            bi,
            PhiU1,
            region_u(3, e(3, 0), e(3, 1)),
            "U: 100|xi1| < |xi|, |xi| > 1/delta_u",
            u_mult,
            "<xi>^{k+eps} / (<xi1>^k <xi2>^s)",
            vec![HalfPlane::gt(-1.0, 1.0, 2.0)],
            vec![(-1.0, 1.0, 2.0)],
            each(),
            FREQUAD,
        ),
        "lem:2" => spec(
            id,
            "coupling term d_x |u|^2 off the resonant set V, gain in Y^{s+eps}",
            bi,
            PhiV1,
            region_v_complement(e(3, 0), e(3, 1)),
            "complement of V",
            v_mult,
            "|xi| <xi>^{s+eps} / (<xi1>^k <xi2>^k)",
            vec![HalfPlane::gt(4.0, -1.0, 0.0), HalfPlane::gt(2.0, -1.0, 1.5)],
            vec![(4.0, -1.0, 0.0), (2.0, -1.0, 1.5)],
            each(),
            FREQUAD,
        ),
        "lem:probV" => spec(
            id,
            "coupling term d_x |u|^2 on the resonant set V",
            bi,
            PhiV1,
            region_v(e(3, 0), e(3, 1)),
            "V: |xi1| > 1/delta_v, |xi1| < 100|xi|",
            v_mult,
            "|xi| <xi>^{s+eps} / (<xi1>^k <xi2>^k)",
            vec![HalfPlane::gt(1.0, -1.0, 1.0)],
            vec![(1.0, -1.0, 1.0)],
            each(),
            FREQUAD,
        ),
        "lem:3" => {
            let m = w(|x, r| {
                let phi = phase_raw(PhiU1, x[0], &[x[1] + x[2], x[3]]).abs();
                jp(x[0]).powf(r.k + r.eps) / (phi * jp(x[1]).powf(r.k) * jp(x[2]).powf(r.s) * jp(x[3]).powf(r.s))
            });
            let (m1, m2) = (m.clone(), m.clone());
            let case_a: RegionFn = Arc::new(|_: &RegionParams| Region {
                all: vec![
                    Clause::Ratio { a: unit(4, 1), c: 1.0 / SEPARATION, b: unit(4, 3) },
                    Clause::Ratio { a: unit(4, 2), c: 1.0 / SEPARATION, b: unit(4, 3) },
                ],
                none_of: vec![],
            });
            spec(
                id,
                "N1^u: boundary-derivative term u11 v12 v2 on U",
                vec!["xi", "xi11", "xi12", "xi2"],
                PsiU1,
                region_u(4, e(4, 0), sum_of(4, &[1, 2])),
                "xi1 = xi11 + xi12 in U",
                m,
                "<xi>^{k+eps} / (|Phi_u1(xi; xi1, xi2)| <xi11>^k <xi12>^s <xi2>^s)",
                vec![HalfPlane::gt(-1.0, 1.0, 3.0), HalfPlane::gt(1.0, 1.0, 1.5), HalfPlane::gt(0.0, 1.0, 2.5)],
                vec![(-1.0, 1.0, 3.0), (0.0, 2.0, 5.0)],
                Criterion::TwoSided(vec![Split {
                    name: "A",
                    fixed: vec![0, 1],
                    first: w(move |x, r| m1(x, r) * x[3].abs().sqrt()),
                    second: w(move |x, r| m2(x, r) / x[3].abs().sqrt()),
                    case: Some(case_a),
                }]),
                TWO_SIDED,
            )
        }
        "lem:4" => {
            let m = w(|x, r| {
                let phi = phase_raw(PhiU1, x[0], &[x[1] + x[2] + x[3], x[4]]).abs();
                jp(x[0]).powf(r.k + r.eps)
                    / (phi * jp(x[1]).powf(r.k) * jp(x[2]).powf(r.k) * jp(x[3]).powf(r.k) * jp(x[4]).powf(r.s))
            });
            let (m1, m2) = (m.clone(), m.clone());
            spec(
                id,
                "N2^u: cubic-in-u boundary-derivative term on U",
                vec!["xi", "xi11", "xi12", "xi13", "xi2"],
                PsiU2,
                region_u(5, e(5, 0), sum_of(5, &[1, 2, 3])),
                "xi1 = xi11 + xi12 + xi13 in U",
                m,
                "<xi>^{k+eps} / (|Phi_u1| <xi11>^k <xi12>^k <xi13>^k <xi2>^s)",
                vec![HalfPlane::gt(-1.0, 1.0, 3.0), HalfPlane::ge(1.0, 0.0, 0.0)],
                vec![(-1.0, 1.0, 3.0)],
                Criterion::TwoSided(vec![Split {
                    name: "A",
                    fixed: vec![0, 1],
                    first: w(move |x, r| m1(x, r) * jp(x[0])),
                    second: w(move |x, r| m2(x, r) / jp(x[0])),
                    case: None,
                }]),
                TWO_SIDED,
            )
        }
        "lem:5" => {
            let m = w(|x, r| {
                let x2 = x[2] + x[3];
                let phi = phase_raw(PhiU1, x[0], &[x[1], x2]).abs();
                x2.abs() * jp(x[0]).powf(r.k + r.eps) / (phi * jp(x[1]).powf(r.k) * jp(x[2]).powf(r.k) * jp(x[3]).powf(r.k))
            });
            spec(
                id,
                "N3^u: u1 times d_x |u|^2 fed through the boundary term, on U",
                vec!["xi", "xi1", "xi21", "xi22"],
                PsiU3,
                region_u(4, e(4, 0), e(4, 1)),
                "xi1 in U",
                m.clone(),
                "|xi2| <xi>^{k+eps} / (|Phi_u1| <xi1>^k <xi21>^k <xi22>^k)",
                vec![HalfPlane::gt(1.0, 0.0, 0.5)],
                vec![(1.0, 0.0, 3.0), (2.0, 0.0, 3.0)],
                Criterion::TwoSided(vec![sym("A", vec![0, 2], m)]),
                TWO_SIDED,
            )
        }
        "lem:6" => {
            let m = w(|x, r| {
                let x2 = x[2] + x[3];
                let phi = phase_raw(PhiU1, x[0], &[x[1], x2]).abs();
                x2.abs() * jp(x[0]).powf(r.k + r.eps) / (phi * jp(x[1]).powf(r.k) * jp(x[2]).powf(r.s) * jp(x[3]).powf(r.s))
            });
            let (m1, m2) = (m.clone(), m.clone());
            spec(
                id,
                "N4^u: u1 times d_x v^2 fed through the boundary term, on U",
                vec!["xi", "xi1", "xi21", "xi22"],
                PsiU4,
                region_u(4, e(4, 0), e(4, 1)),
                "xi1 in U",
                m,
                "|xi2| <xi>^{k+eps} / (|Phi_u1| <xi1>^k <xi21>^s <xi22>^s)",
                vec![HalfPlane::gt(-1.0, 1.0, 3.0), HalfPlane::ge(0.0, 1.0, 1.0)],
                vec![(-1.0, 1.0, 3.0)],
                Criterion::TwoSided(vec![Split {
                    name: "A1",
                    fixed: vec![1, 3],
                    first: w(move |x, r| m1(x, r) * jp(x[2]) / (x[2] + x[3]).abs()),
                    second: w(move |x, r| m2(x, r) * (x[2] + x[3]).abs() / jp(x[2])),
                    case: None,
                }]),
                TWO_SIDED,
            )
        }
        "lem:7" => {
            let m = w(|x, r| {
                let phi = phase_raw(PhiV1, x[0], &[x[1] + x[2], x[3]]).abs();
                x[0].abs() * jp(x[0]).powf(r.s + r.eps) / (phi * jp(x[1]).powf(r.k) * jp(x[2]).powf(r.s) * jp(x[3]).powf(r.k))
            });
            spec(
                id,
                "N1^v and N3^v: boundary-derivative terms of the KdV equation on V",
                vec!["xi", "xi11", "xi12", "xi2"],
                PsiV1,
                region_v(e(4, 0), sum_of(4, &[1, 2])),
                "xi1 = xi11 + xi12 in V",
                m.clone(),
                "|xi| <xi>^{s+eps} / (|Phi_v1| <xi11>^k <xi12>^s <xi2>^k)",
                vec![HalfPlane::gt(1.0, -1.0, 2.5), HalfPlane::gt(1.0, 1.0, 1.5), HalfPlane::ge(1.0, 0.0, 0.0)],
                vec![(1.0, -1.0, 2.5), (2.0, 0.0, 2.5), (0.0, 0.0, 4.0)],
                Criterion::TwoSided(vec![sym("A", vec![0, 1], m)]),
                TWO_SIDED,
            )
        }
        "lem:8" => {
            let m = w(|x, r| {
                let phi = phase_raw(PhiV1, x[0], &[x[1] + x[2] + x[3], x[4]]).abs();
                x[0].abs() * jp(x[0]).powf(r.s + r.eps)
                    / (phi * jp(x[1]).powf(r.k) * jp(x[2]).powf(r.k) * jp(x[3]).powf(r.k) * jp(x[4]).powf(r.k))
            });
            spec(
                id,
                "N2^v and N4^v: quartic boundary-derivative terms of the KdV equation on V",
                vec!["xi", "xi11", "xi12", "xi13", "xi2"],
                PsiV2,
                region_v(e(5, 0), sum_of(5, &[1, 2, 3])),
                "xi1 = xi11 + xi12 + xi13 in V",
                m.clone(),
                "|xi| <xi>^{s+eps} / (|Phi_v1| <xi11>^k <xi12>^k <xi13>^k <xi2>^k)",
                vec![
                    HalfPlane::gt(1.0, -1.0, 3.0),
                    HalfPlane::gt(2.0, -1.0, 2.5),
                    HalfPlane::gt(4.0, -1.0, 0.5),
                    HalfPlane::ge(1.0, 0.0, 0.0),
                ],
                vec![(4.0, -1.0, 0.5), (1.0, -1.0, 3.0), (2.0, -1.0, 2.5)],
                Criterion::TwoSided(vec![sym("B", vec![4, 3], m)]),
                TWO_SIDED,
            )
        }
        "lem:bdryHs-u" => spec(
            id,
            "boundary term B^u in L^inf H^{k+eps}",
            bi,
            PhiU1,
            region_u(3, e(3, 0), e(3, 1)),
            "U",
            w(|x, r| {
                let phi = phase_raw(PhiU1, x[0], &x[1..]).abs();
                jp(x[0]).powf(r.k + r.eps) / (phi * jp(x[1]).powf(r.k) * jp(x[2]).powf(r.s))
            }),
            "<xi>^{k+eps} / (|Phi_u1| <xi1>^k <xi2>^s)",
            vec![HalfPlane::gt(-1.0, 1.0, 3.0), HalfPlane::gt(0.0, 1.0, 2.5)],
            vec![(-1.0, 1.0, 3.0), (0.0, 1.0, 2.5)],
            Criterion::Unwindowed(vec![0]),
            BOUNDED,
        ),
        "lem:bdryHs-v" => spec(
            id,
            "boundary term B^v in L^inf H^{s+eps}",
            bi,
            PhiV1,
            region_v(e(3, 0), e(3, 1)),
            "V",
            w(|x, r| {
                let phi = phase_raw(PhiV1, x[0], &x[1..]).abs();
                x[0].abs() * jp(x[0]).powf(r.s + r.eps) / (phi * jp(x[1]).powf(r.k) * jp(x[2]).powf(r.k))
            }),
            "|xi| <xi>^{s+eps} / (|Phi_v1| <xi1>^k <xi2>^k)",
            vec![HalfPlane::gt(1.0, -1.0, 2.0), HalfPlane::gt(4.0, -1.0, 0.0)],
            vec![(1.0, -1.0, 2.0), (4.0, -1.0, 0.0)],
            Criterion::Unwindowed(vec![0]),
            BOUNDED,
        ),
        "lem:smooth_nls" => {
            let m = w(|x, r| jp(x[0]).powf(r.k + r.eps) / (jp(x[1]) * jp(x[2]) * jp(x[3])).powf(r.k));
            spec(
                id,
                "cubic term |u|^2 u, gain in X^{k+eps}",
                vec!["xi", "xi1", "xi2", "xi3"],
                NlsCubic,
                Arc::new(|_: &RegionParams| Region::everywhere()),
                "all frequencies",
                m.clone(),
                "<xi>^{k+eps} / (<xi1>^k <xi2>^k <xi3>^k)",
                vec![HalfPlane::gt(1.0, 0.0, 0.0)],
                vec![(2.0, 0.0, 0.0), (0.0, 0.0, 1.0)],
                Criterion::TwoSided(vec![sym("A", vec![0, 2], m)]),
                TWO_SIDED,
            )
        }
        "lem:est_dxv2-high" => {
            let mut s = spec(
                id,
                "d_x(v^2) with comparable inputs, one derivative gained",
                bi,
                PhiV2,
                Arc::new(|_: &RegionParams| Region {
                    all: vec![
                        Clause::Ratio { a: unit(3, 2), c: SEPARATION, b: unit(3, 1) },
                        Clause::Ratio { a: unit(3, 0), c: SEPARATION, b: unit(3, 2) },
                    ],
                    none_of: vec![],
                }),
                "|xi2| < 100|xi1|, |xi| < 100|xi2|",
                w(|x, r| x[0].abs() * jp(x[0]).powf(r.s + r.eps) / (jp(x[1]) * jp(x[2])).powf(r.s)),
                "|xi| <xi>^{s+eps} / (<xi1>^s <xi2>^s)",
                vec![HalfPlane::gt(0.0, 1.0, -0.25)],
                vec![(0.0, 0.0, 1.0)],
                each(),
                FREQUAD,
            );
            s.eps_inclusive = true;
            s
        }
        "lem:N0B" => {
            let m = w(|x, r| {
                let phi = phase_raw(PhiU1, x[1] + x[2], &[x[1], x[2]]).abs();
                jp(x[0]).powf(r.k + r.eps) / (phi * jp(x[1]).powf(r.k - 1.0) * jp(x[2]).powf(r.s) * jp(x[3]).powf(r.s))
            });
            let mut validity = admissible_half_planes();
            validity.push(HalfPlane::ge(1.0, 0.0, -1.0));
            let mut s = spec(
                id,
                "N0^u applied to the boundary term B^u, first input in X^{k-1}",
                vec!["xi", "xi11", "xi12", "xi2"],
                PsiU1,
                Arc::new(|p: &RegionParams| {
                    let xi1 = sum_of(4, &[1, 2]);
                    Region { all: u_clauses(&xi1, &unit(4, 1), p), none_of: vec![u_clauses(&unit(4, 0), &xi1, p)] }
                }),
                "xi11 in U relative to xi1 = xi11 + xi12, and (xi1, xi2) off U",
                m.clone(),
                "<xi>^{k+eps} / (|Phi_u1(xi1; xi11, xi12)| <xi11>^{k-1} <xi12>^s <xi2>^s)",
                validity,
                vec![(0.0, 0.0, 0.0)],
                Criterion::TwoSided(vec![sym("A", vec![0, 3], m)]),
                TWO_SIDED,
            );
            s.eps_inclusive = true;
            s
        }
        _ => return Err(FreError::UnknownId(id.to_string())),
    };
    Ok(out)
}

pub fn catalog() -> Vec<EstimateSpec> {
    CATALOG_IDS.iter().map(|id| catalog_lookup(id).expect("catalog ids resolve")).collect()
}

/// Estimates each local well-posedness regime relies on, with its band in `k - s`.
pub fn regime_entries() -> Vec<(&'static str, Vec<&'static str>, Vec<HalfPlane>)> {
    vec![
        (
            "classical",
            vec!["est_kdv", "est_nls", "lem:1", "lem:probU", "lem:2", "lem:probV"],
            vec![HalfPlane::gt(1.0, -1.0, 1.0), HalfPlane::gt(-1.0, 1.0, 2.0)],
        ),
        (
            "ibp_u",
            vec!["est_kdv", "est_nls", "lem:1", "lem:3", "lem:4", "lem:5", "lem:6", "lem:bdryHs-u", "lem:2", "lem:probV"],
            vec![HalfPlane::ge(1.0, -1.0, -2.0), HalfPlane::gt(-1.0, 1.0, 3.0)],
        ),
        (
            "ibp_v",
            vec!["est_kdv", "est_nls", "lem:1", "lem:probU", "lem:2", "lem:7", "lem:8", "lem:bdryHs-v"],
            vec![HalfPlane::gt(1.0, -1.0, 2.0), HalfPlane::ge(-1.0, 1.0, -1.0)],
        ),
    ]
}

/// Clip a convex polygon to `a k + b s + c >= 0`.
fn clip(poly: &[(f64, f64)], h: &HalfPlane) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let n = poly.len();
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let (vp, vq) = (h.value(p.0, p.1), h.value(q.0, q.1));
        if vp >= 0.0 {
            out.push(p);
        }
        if (vp >= 0.0) != (vq >= 0.0) {
            let t = vp / (vp - vq);
            out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
        }
    }
    out
}

pub fn polygon_area(poly: &[(f64, f64)]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n).map(|i| poly[i].0 * poly[(i + 1) % n].1 - poly[(i + 1) % n].0 * poly[i].1).sum::<f64>().abs()
}

/// Closure of the intersection of half-planes inside the box `[lo, hi]^2`.
pub fn clip_box(planes: &[HalfPlane], lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut poly = vec![(lo, lo), (hi, lo), (hi, hi), (lo, hi)];
    for h in planes {
        poly = clip(&poly, h);
        if poly.is_empty() {
            break;
        }
    }
    poly
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimePolygon {
    pub regime: &'static str,
    pub polygon: Vec<(f64, f64)>,
    pub area: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibleReconstruction {
    pub regimes: Vec<RegimePolygon>,
    pub union_area: f64,
    pub admissible_area: f64,
    /// Every regime vertex lies in the closure of the admissible region.
    pub inside: bool,
}

/// Intersects, per regime, the validity half-planes of every estimate it uses, and compares
/// the union with the admissible region inside the box `[lo, hi]^2`.
pub fn reconstruct_admissible(lo: f64, hi: f64) -> AdmissibleReconstruction {
    let adm = admissible_half_planes();
    let mut regimes = Vec::new();
    for (name, ids, band) in regime_entries() {
        let mut planes = band;
        for id in ids {
            match cited_half_planes(id) {
                Some(h) => planes.extend(h),
                None => planes.extend(catalog_lookup(id).expect("regime ids resolve").validity),
            }
        }
        let polygon = clip_box(&planes, lo, hi);
        let area = polygon_area(&polygon);
        regimes.push(RegimePolygon { regime: name, polygon, area });
    }
    let inside = regimes.iter().flat_map(|r| r.polygon.iter()).all(|&(k, s)| adm.iter().all(|h| h.value(k, s) >= -1e-9));
    // the bands overlap only on lines, so areas add
    let union_area = regimes.iter().map(|r| r.area).sum();
    AdmissibleReconstruction { regimes, union_area, admissible_area: polygon_area(&clip_box(&adm, lo, hi)), inside }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_phases_match_raw() {
        let x = [0.7, -1.3, 2.1, 0.4, -0.9];
        for id in PhaseId::ALL {
            let n = id.arity() + 1;
            let mut t = x[..n].to_vec();
            t[0] = t[1..].iter().sum();
            let p = SeparablePhase::from_id(id);
            assert!((p.eval(&t) - phase_raw(id, t[0], &t[1..])).abs() < 1e-12, "{id:?}");
        }
    }

    #[test]
    fn along_is_exact() {
        let p = SeparablePhase::from_id(PhaseId::PsiV2);
        let (a, b) = ([1.0, 2.0, -0.5, 0.3, 0.1], [0.5, -1.0, 0.0, 2.0, 1.0]);
        let c = p.along(&a, &b);
        for t in [-2.0, 0.3, 1.7] {
            let x: Vec<f64> = a.iter().zip(&b).map(|(a, b)| a + t * b).collect();
            let cubic = c[0] + t * (c[1] + t * (c[2] + t * c[3]));
            assert!((cubic - p.eval(&x)).abs() < 1e-12);
        }
    }
}
