//! Command-line Monte Carlo laboratory for the extreme value estimators:
//! declarative experiment configs, deterministic replication seeding,
//! worker-parallel execution with scheduling-independent output, and CSV/JSON
//! emission with pass/fail verdicts.
//!
//! Four experiments are built in:
//!
//! * `uni-consistency` -- bias/RMSE of the moment estimator and the relative
//!   error of the extrapolated quantile against the model oracle.
//! * `error-propagation` -- perturbs observations multiplicatively at rate
//!   h_n and checks that the four error statistics stay bounded once scaled
//!   by z_n = h_n U(n/k)/a(n/k) (and a(n/k), q_gamma(d_n) where they apply).
//! * `ratio-bound` -- sqrt(n) times the worst tail ratio error between
//!   estimated and true Mahalanobis residuals.
//! * `elliptical-consistency` -- symmetric-difference mass between the
//!   estimated and true quantile regions, relative to p.

pub mod config;
pub mod emit;
pub mod experiments;
pub mod seed;
pub mod summary;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimlabError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] evtlab_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub use config::{Experiment, ExperimentConfig, ModelSpec, PerturbationMode, PowerRule};
pub use experiments::{run, Outcome, ReplicationRecord, RunOutput};
pub use seed::derive_seed;
