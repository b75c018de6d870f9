//! Declarative experiment configuration.
//!
//! A config is one JSON document; unknown keys are rejected rather than
//! silently absorbed. `validate` resolves the rules into a concrete per-n
//! plan and reports every inconsistency as a config error.

use evtlab_core::linalg::SpdMatrix;
use evtlab_core::models::{EllipticalModel, TailModel};
use serde::{Deserialize, Serialize};

use crate::SimlabError;

/// The four built-in verification suites.
#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    UniConsistency,
    ErrorPropagation,
    RatioBound,
    EllipticalConsistency,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [
        Experiment::UniConsistency,
        Experiment::ErrorPropagation,
        Experiment::RatioBound,
        Experiment::EllipticalConsistency,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::UniConsistency => "uni-consistency",
            Experiment::ErrorPropagation => "error-propagation",
            Experiment::RatioBound => "ratio-bound",
            Experiment::EllipticalConsistency => "elliptical-consistency",
        }
    }

    /// Stable numeric id mixed into every replication seed.
    pub fn id(&self) -> u64 {
        match self {
            Experiment::UniConsistency => 1,
            Experiment::ErrorPropagation => 2,
            Experiment::RatioBound => 3,
            Experiment::EllipticalConsistency => 4,
        }
    }

    pub fn is_elliptical(&self) -> bool {
        matches!(
            self,
            Experiment::RatioBound | Experiment::EllipticalConsistency
        )
    }
}

/// Model declaration: a reference distribution plus its parameters.
#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Pareto { alpha: f64 },
    Frechet { alpha: f64 },
    Exponential { rate: f64 },
    Bounded { endpoint: f64, gamma: f64 },
}

impl ModelSpec {
    pub fn build(&self) -> Result<TailModel, SimlabError> {
        let model = match *self {
            ModelSpec::Pareto { alpha } => TailModel::pareto(alpha),
            ModelSpec::Frechet { alpha } => TailModel::frechet(alpha),
            ModelSpec::Exponential { rate } => TailModel::exponential(rate),
            ModelSpec::Bounded { endpoint, gamma } => TailModel::bounded(endpoint, gamma),
        };
        model.map_err(|e| SimlabError::Config(format!("model: {e}")))
    }
}

/// Power rule `c * n^a` used for the k, p, and h schedules.
#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PowerRule {
    pub c: f64,
    pub a: f64,
}

impl PowerRule {
    pub fn eval(&self, n: usize) -> f64 {
        self.c * (n as f64).powf(self.a)
    }
}

/// How observations are perturbed in the error-propagation suite.
#[derive(Serialize, Deserialize, Clone, Copy, Debug, Default, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationMode {
    /// i.i.d. multiplicative noise uniform on [-h, h].
    #[default]
    Uniform,
    /// Deterministic worst-case stressor: epsilon_i = h * (-1)^i.
    Alternating,
}

/// Verdict thresholds. Desk-scale engineering choices, not theory claims;
/// summary.json labels them as such.
#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct VerdictConfig {
    /// Max allowed |median gamma_M - gamma| in uni-consistency.
    pub index_tolerance: f64,
    /// Boundedness proxy: last-grid 95th percentile at most this factor
    /// times the first-grid one.
    pub bound_factor: f64,
    /// Final-grid cap on the median symmetric-difference ratio.
    pub ratio_threshold: f64,
}

impl Default for VerdictConfig {
    fn default() -> Self {
        Self {
            index_tolerance: 0.12,
            bound_factor: 2.0,
            ratio_threshold: 0.5,
        }
    }
}

/// One declarative Monte Carlo sweep.
#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: ModelSpec,
    pub n_grid: Vec<usize>,
    pub k_rule: PowerRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_rule: Option<PowerRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_rule: Option<PowerRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationMode>,
    /// Exponent for the gamma = 0 decay diagnostic (caller-supplied).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    /// Scatter matrix rows; must have determinant 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Vec<f64>>>,
    pub replications: usize,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_draws: Option<usize>,
    /// Worker threads; 0 or absent means one worker.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<VerdictConfig>,
}

/// Resolved plan for one grid point.
#[derive(Clone, Copy, Debug)]
pub struct GridPoint {
    pub n: usize,
    pub k: usize,
    pub p: Option<f64>,
    pub h: Option<f64>,
}

/// Config after validation: concrete grid plus the built models.
#[derive(Debug)]
pub struct Plan {
    pub grid: Vec<GridPoint>,
    pub model: TailModel,
    /// Present for the elliptical experiments.
    pub elliptical: Option<EllipticalModel>,
    pub verdict: VerdictConfig,
    pub warnings: Vec<String>,
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, SimlabError> {
    Err(SimlabError::Config(msg.into()))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, SimlabError> {
        serde_json::from_str(text).map_err(|e| SimlabError::Config(e.to_string()))
    }

    /// Full validation; returns the resolved per-n plan.
    pub fn validate(&self) -> Result<Plan, SimlabError> {
        let mut warnings = Vec::new();
        let exp = self.experiment;

        if self.n_grid.is_empty() {
            return config_err("n_grid must not be empty");
        }
        for w in self.n_grid.windows(2) {
            if w[1] <= w[0] {
                return config_err("n_grid must be strictly increasing");
            }
        }

        // experiment-specific field applicability
        let needs_p = exp != Experiment::RatioBound;
        if needs_p && self.p_rule.is_none() {
            return config_err(format!("experiment '{}' requires p_rule", exp.name()));
        }
        if !needs_p && self.p_rule.is_some() {
            return config_err("p_rule is not used by experiment 'ratio-bound'");
        }
        if exp == Experiment::ErrorPropagation {
            if self.h_rule.is_none() {
                return config_err("experiment 'error-propagation' requires h_rule");
            }
        } else {
            if self.h_rule.is_some() {
                return config_err(format!("h_rule is not used by experiment '{}'", exp.name()));
            }
            if self.perturbation.is_some() {
                return config_err(format!(
                    "perturbation is not used by experiment '{}'",
                    exp.name()
                ));
            }
            if self.delta.is_some() {
                return config_err(format!("delta is not used by experiment '{}'", exp.name()));
            }
        }
        if exp.is_elliptical() {
            if self.dimension.is_none() {
                return config_err(format!("experiment '{}' requires dimension", exp.name()));
            }
        } else if self.dimension.is_some() || self.mu.is_some() || self.sigma.is_some() {
            return config_err(format!(
                "dimension/mu/sigma are not used by experiment '{}'",
                exp.name()
            ));
        }
        if exp == Experiment::EllipticalConsistency {
            match self.mc_draws {
                None => return config_err("elliptical-consistency requires mc_draws"),
                Some(m) if m < 1_000 => {
                    return config_err("mc_draws must be at least 1000");
                }
                _ => {}
            }
            let p = self.p_rule.as_ref().unwrap();
            if p.a != -1.0 {
                return config_err(
                    "elliptical-consistency requires p_rule of the form c/n (a = -1)",
                );
            }
        } else if self.mc_draws.is_some() {
            return config_err(format!(
                "mc_draws is not used by experiment '{}'",
                exp.name()
            ));
        }
        if let Some(d) = self.delta {
            if d.is_nan() || d <= 0.0 {
                return config_err("delta must be positive");
            }
        }

        let model = self.model.build()?;
        let gamma = model.gamma();

        if exp == Experiment::EllipticalConsistency && gamma <= -0.5 {
            return config_err(format!(
                "elliptical-consistency requires a generator with gamma > -1/2 \
                 (got {gamma}); use the max-residual region for shorter tails"
            ));
        }
        if exp.is_elliptical() && gamma >= 0.25 {
            warnings.push(format!(
                "generator gamma = {gamma} >= 1/4: the generating variate has no \
                 finite fourth moment, so sample-covariance sqrt(n)-consistency is \
                 not guaranteed"
            ));
        }

        // resolve the grid
        let mut grid = Vec::with_capacity(self.n_grid.len());
        for &n in &self.n_grid {
            if n < 2 {
                return config_err(format!("n = {n} is too small"));
            }
            let k = self.k_rule.eval(n).floor();
            if !(k >= 1.0 && k < n as f64) {
                return config_err(format!("k_rule gives k = {k} outside [1, n-1] at n = {n}"));
            }
            let k = k as usize;
            let p = match &self.p_rule {
                Some(rule) => {
                    let p = rule.eval(n);
                    if !(p > 0.0 && p <= k as f64 / n as f64) {
                        return config_err(format!(
                            "p_rule gives p = {p} outside (0, k/n] at n = {n} (k = {k})"
                        ));
                    }
                    if exp == Experiment::EllipticalConsistency && p > model.region_p_threshold() {
                        return config_err(format!(
                            "p = {p} at n = {n} exceeds the region representation \
                             threshold {}",
                            model.region_p_threshold()
                        ));
                    }
                    Some(p)
                }
                None => None,
            };
            let h = match &self.h_rule {
                Some(rule) => {
                    let h = rule.eval(n);
                    if !(h >= 0.0 && h.is_finite()) {
                        return config_err(format!("h_rule gives h = {h} at n = {n}"));
                    }
                    Some(h)
                }
                None => None,
            };
            grid.push(GridPoint { n, k, p, h });
        }

        // build the elliptical model once so mu/sigma errors surface here
        let elliptical = if exp.is_elliptical() {
            let d = self.dimension.unwrap();
            if d < 1 {
                return config_err("dimension must be at least 1");
            }
            if self.n_grid[0] <= d {
                return config_err(format!(
                    "scatter estimation needs n > dimension; n_grid starts at {} with d = {d}",
                    self.n_grid[0]
                ));
            }
            let mu = match &self.mu {
                Some(v) => {
                    if v.len() != d {
                        return config_err(format!(
                            "mu has length {}, expected dimension {d}",
                            v.len()
                        ));
                    }
                    v.clone()
                }
                None => vec![0.0; d],
            };
            let sigma = match &self.sigma {
                Some(rows) => {
                    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                        return config_err(format!("sigma must be a {d}x{d} matrix"));
                    }
                    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                    SpdMatrix::new(d, flat)
                        .map_err(|e| SimlabError::Config(format!("sigma: {e}")))?
                }
                None => SpdMatrix::identity(d),
            };
            Some(
                EllipticalModel::new(mu, sigma, model)
                    .map_err(|e| SimlabError::Config(format!("elliptical model: {e}")))?,
            )
        } else {
            None
        };

        Ok(Plan {
            grid,
            model,
            elliptical,
            verdict: self.verdict.unwrap_or_default(),
            warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_json() -> String {
        r#"{
            "experiment": "uni-consistency",
            "model": {"name": "frechet", "alpha": 2.0},
            "n_grid": [1000, 2000],
            "k_rule": {"c": 1.0, "a": 0.6},
            "p_rule": {"c": 1.0, "a": -1.0},
            "replications": 10,
            "master_seed": 7
        }"#
        .to_string()
    }

    #[test]
    fn parses_and_validates_base_config() {
        let cfg = ExperimentConfig::from_json(&base_json()).unwrap();
        let plan = cfg.validate().unwrap();
        assert_eq!(plan.grid.len(), 2);
        assert_eq!(plan.grid[0].n, 1000);
        assert_eq!(plan.grid[0].k, 63); // floor(1000^0.6)
        assert!(plan.warnings.is_empty());
    }

    #[test]
    fn unknown_keys_are_errors() {
        let text = base_json().replace("\"master_seed\": 7", "\"master_seed\": 7, \"typo\": 1");
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn non_applicable_fields_rejected() {
        let text = base_json().replace(
            "\"master_seed\": 7",
            "\"master_seed\": 7, \"mc_draws\": 10000",
        );
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn decreasing_grid_rejected() {
        let text = base_json().replace("[1000, 2000]", "[2000, 1000]");
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn p_above_k_over_n_rejected() {
        let text = base_json().replace(
            "\"p_rule\": {\"c\": 1.0, \"a\": -1.0}",
            "\"p_rule\": {\"c\": 0.9, \"a\": 0.0}",
        );
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn heavy_tail_warning_for_elliptical() {
        let text = r#"{
            "experiment": "ratio-bound",
            "model": {"name": "pareto", "alpha": 2.0},
            "n_grid": [1000, 2000],
            "k_rule": {"c": 1.0, "a": 0.6},
            "dimension": 2,
            "replications": 5,
            "master_seed": 1
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let plan = cfg.validate().unwrap();
        assert_eq!(plan.warnings.len(), 1, "{:?}", plan.warnings);
    }

    #[test]
    fn elliptical_consistency_requires_c_over_n() {
        let text = r#"{
            "experiment": "elliptical-consistency",
            "model": {"name": "frechet", "alpha": 5.0},
            "n_grid": [1000, 4000],
            "k_rule": {"c": 1.0, "a": 0.7},
            "p_rule": {"c": 1.0, "a": -0.9},
            "dimension": 2,
            "replications": 5,
            "master_seed": 1,
            "mc_draws": 10000
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("c/n"), "{err}");
    }

    #[test]
    fn short_tail_rejected_for_consistency_suite() {
        let text = r#"{
            "experiment": "elliptical-consistency",
            "model": {"name": "bounded", "endpoint": 2.0, "gamma": -0.75},
            "n_grid": [1000, 4000],
            "k_rule": {"c": 1.0, "a": 0.7},
            "p_rule": {"c": 1.0, "a": -1.0},
            "dimension": 2,
            "replications": 5,
            "master_seed": 1,
            "mc_draws": 10000
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert!(cfg.validate().is_err());
    }
}
