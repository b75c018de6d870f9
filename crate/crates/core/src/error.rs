//! Error type shared by all library modules.

use thiserror::Error;

/// Errors raised by the estimation and simulation primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Matrix entries differ from their transpose beyond tolerance.
    #[error(
        "matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {deviation:e} exceeds tolerance"
    )]
    NotSymmetric { i: usize, j: usize, deviation: f64 },

    /// The Jacobi sweep cap was reached with off-diagonal mass above tolerance.
    #[error("eigendecomposition did not converge after {sweeps} sweeps (residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    /// An eigenvalue is zero or negative relative to the largest one.
    #[error("matrix is not positive definite (eigenvalue {eigenvalue:e})")]
    NotPositiveDefinite { eigenvalue: f64 },

    /// Vector/matrix dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An observation was zero, negative, or not finite.
    #[error("observation at index {index} is not strictly positive and finite")]
    NonPositiveObservation { index: usize },

    /// Not enough observations for the requested operation.
    #[error("too few observations: need at least {needed}, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    /// Tail count k outside `1 <= k < n`.
    #[error("invalid tail count k = {k} for sample size n = {n}")]
    InvalidK { k: usize, n: usize },

    /// Top k+1 order statistics are all equal; the moment estimator is undefined.
    #[error("degenerate tail: second log-moment vanishes or m1^2 = m2 for k = {k}")]
    DegenerateTail { k: usize },

    /// A quantile query violated its constraints (e.g. d_n < 1).
    #[error("invalid quantile query: {reason}")]
    InvalidQuery { reason: String },

    /// A scalar argument was outside its domain.
    #[error("invalid argument: {reason}")]
    InvalidArgument { reason: String },

    /// A decay-condition schedule was malformed.
    #[error("invalid schedule: {reason}")]
    InvalidSchedule { reason: String },

    /// A distribution parameter was outside its domain.
    #[error("invalid parameter: {reason}")]
    InvalidParameter { reason: String },

    /// Conditional sampling threshold carries no tail mass.
    #[error("threshold {threshold} is at or beyond the distribution endpoint")]
    ThresholdAtEndpoint { threshold: f64 },

    /// No second-order data is declared for this model/branch.
    #[error("unknown model: no second-order oracle declared")]
    UnknownModel,

    /// A scatter matrix violated the det = 1 normalization.
    #[error("scatter determinant is {det}, expected 1")]
    DeterminantNotOne { det: f64 },

    /// Sample covariance is singular (or numerically so).
    #[error("sample covariance is singular")]
    SingularCovariance,

    /// An affine transform matrix is singular.
    #[error("transform matrix is singular")]
    SingularTransform,

    /// Quantile level p above the model's region-representation threshold.
    #[error("p = {p} exceeds the region representation threshold {threshold}")]
    InvalidP { p: f64, threshold: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
