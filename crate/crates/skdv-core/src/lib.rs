//! Numerical laboratory for the coupled Schrodinger-KdV system
//!
//! ```text
//! i u_t + u_xx = a u v + b |u|^2 u
//! v_t + v_xxx + (v^2)_x / 2 = g (|u|^2)_x
//! ```
//!
//! The crate is split by concern:
//!
//! * [`spectral`]: torus grids, scaled transforms, Sobolev and Bourgain norms, random data.
//! * [`resonance`]: resonance polynomials, their compositions, frequency regions.
//! * [`evolution`]: classical and integrated-by-parts profile evolutions, diagnostics.
//! * [`fre`]: brute-force evaluation of frequency-restricted estimates and scaling fits.
//! * [`counterexamples`]: quadrature harnesses for the ill-posedness growth rates.
//!
//! Data-parallel loops go through [`par`], which falls back to plain iteration when
//! the `parallel` feature is disabled or a sequential [`par::Parallelism`] is requested.

// `!(x > 0.0)` style guards are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod counterexamples;
pub mod evolution;
pub mod fit;
pub mod fre;
pub mod par;
pub mod quad;
pub mod resonance;
pub mod spectral;

pub use num_complex::Complex64;
