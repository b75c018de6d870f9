//! Moment-estimator extreme value analysis and elliptical extreme quantile
//! regions.
//!
//! The crate has four layers:
//!
//! * [`linalg`] -- small-dimension SPD matrices: Jacobi eigensolver, matrix
//!   square root, inverse, determinant normalization, Mahalanobis norms.
//! * [`evt`] -- order statistics, log-spacing moments, the moment estimator
//!   of the extreme value index (valid for every real index), and the
//!   extrapolated extreme quantile.
//! * [`models`] -- reference tail distributions with closed-form quantiles,
//!   samplers, and first/second-order oracles, plus sphere and elliptical
//!   samplers.
//! * [`regions`] -- location/scatter estimation, Mahalanobis residuals, the
//!   plug-in extreme quantile region, affine transforms, and Monte Carlo
//!   symmetric-difference probabilities.
//!
//! Everything is pure computation over immutable values: no globals, no
//! caches, safe to drive from any number of threads. Randomness comes only
//! from an explicit [`rng::SimRng`] handed into the samplers.

pub mod error;
pub mod evt;
pub mod linalg;
pub mod models;
pub mod regions;
pub mod rng;

pub use error::{Error, Result};
