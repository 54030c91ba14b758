//! Adapted analytic coordinate charts for finite families of real-analytic
//! vector fields.
//!
//! Given vector fields `X_1, ..., X_q` with power-series coefficients, this
//! crate builds the exponential chart `Φ(t) = exp(t_1 X_{j_1} + ... + t_n X_{j_n}) x_0`
//! around a base point, computes the matrix series `A` with
//! `Φ^* X_{J_0} = (I + A) ∇` through a contraction-mapping solver, and derives
//! the densities, rescaled fields and Carnot–Carathéodory ball estimates used
//! for sub-Riemannian scaling.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! and parallel sweeps live in the companion `adchart` crate.
//!
//! Module map:
//!
//! * [`series`]: truncated multivariate power series with the weighted
//!   `Σ |c_α|/α! r^{|α|}` norm, plus matrix-valued series.
//! * [`fields`]: vector fields with series coefficients, Lie brackets, wedge
//!   minors, basis selection, bracket closure and structure coefficients.
//! * [`flow`]: numerical flows, Taylor expansion of the exponential chart,
//!   numerical pullbacks, analytic norms and reachable-set sampling.
//! * [`adapt`]: the chart pipeline (contraction solver, series ODE solver,
//!   densities, verification).
//! * [`scaling`]: dilations, `Λ(x, δ)`, per-scale charts, volume/doubling tables
//!   and leaf scaling for rank-deficient families.

#![no_std]
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adapt;
pub mod catalog;
mod error;
pub mod fields;
pub mod flow;
pub mod linalg;
mod math;
pub mod scaling;
pub mod series;

pub use error::{Error, Result};
pub use math::{binomial, factorial, k_subsets};
