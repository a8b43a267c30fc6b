//! Frequency-restricted estimates.
//!
//! An estimate is a phase, a region of frequency space and a multiplier. Its value at
//! `(alpha, M)` is the sup over a set of fixed frequencies of the weighted measure of the
//! other frequencies where `|Phi - alpha| < M`. [`evaluate_fre`] computes that number by
//! brute force on a truncated lattice; [`sweep_and_fit`] and [`divergence_check`] turn
//! families of values into scaling exponents and growth verdicts.

pub mod catalog;
mod engine;
mod sweep;

pub use catalog::{
    admissible_half_planes, catalog, catalog_lookup, cited_half_planes, jp, reconstruct_admissible, regime_entries,
    AdmissibleReconstruction, CatalogSummary, Claim, Clause, Criterion, EstimateSpec, HalfPlane, Region, RegionFn,
    RegimePolygon, SeparablePhase, Split, WeightFn, CATALOG_IDS,
};
pub use engine::{check_weight_product, complement, evaluate_fre, two_sided_fre, FreQuery, FreResult, Lattice};
pub use sweep::{divergence_check, sweep_and_fit, DivergenceReport, ScalingFit, SweepPoint};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FreError {
    #[error("unknown estimate id `{0}`")]
    UnknownId(String),
    #[error("invalid query: {0}")]
    Invalid(String),
    #[error("fit refused: {excluded} of {total} points flagged")]
    FitRefused { excluded: usize, total: usize },
    #[error("need at least {needed} distinct values per axis, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("weights do not multiply to the squared multiplier (relative error {relative:.3e})")]
    WeightMismatch { relative: f64 },
}
