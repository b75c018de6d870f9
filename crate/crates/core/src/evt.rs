//! Univariate extreme value estimation from the top k order statistics.
//!
//! The central object is the moment estimator of the extreme value index,
//! built from first and second moments of log-spacings:
//!
//! ```text
//! m_l      = (1/k) sum_{j=0}^{k-1} (ln Y_{n-j,n} - ln Y_{n-k,n})^l,  l = 1,2
//! gamma+   = m_1                                (Hill estimator)
//! gamma-   = 1 - (1/2) (1 - m_1^2/m_2)^{-1}
//! gamma_M  = gamma+ + gamma-
//! sigma_M  = Y_{n-k,n} m_1 (1 - gamma-)
//! ```
//!
//! valid for all real gamma, plus the extrapolated extreme quantile
//! `x_p = Y_{n-k,n} + sigma_M (d_n^gamma_M - 1)/gamma_M` with `d_n = k/(np)`.
//!
//! Order statistics follow the 1-indexed convention `Y_{1,n} <= ... <= Y_{n,n}`.

use crate::error::{Error, Result};

/// Threshold below which `(d^g - 1)/g` switches to its analytic limit `ln d`.
const GAMMA_ZERO_EPS: f64 = 1e-9;

/// Ascending, strictly positive observations with validated order statistics.
#[derive(Clone, Debug)]
pub struct OrderedSample {
    values: Vec<f64>,
}

impl OrderedSample {
    /// Sort and validate a raw sample. Rejects samples of fewer than two
    /// observations and any entry that is not strictly positive and finite
    /// (reporting the first offending index of the raw input).
    pub fn new(mut raw: Vec<f64>) -> Result<Self> {
        if raw.len() < 2 {
            return Err(Error::TooFewObservations {
                needed: 2,
                got: raw.len(),
            });
        }
        for (index, &v) in raw.iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::NonPositiveObservation { index });
            }
        }
        raw.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { values: raw })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Order statistic Y_{j,n}, 1-indexed: j = 1 is the minimum.
    pub fn order_statistic(&self, j: usize) -> f64 {
        self.values[j - 1]
    }

    /// The tail threshold Y_{n-k,n}.
    pub fn tail_threshold(&self, k: usize) -> Result<f64> {
        let n = self.n();
        if k < 1 || k >= n {
            return Err(Error::InvalidK { k, n });
        }
        Ok(self.values[n - 1 - k])
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// First and second log-spacing moments over the top k observations.
#[derive(Clone, Copy, Debug)]
pub struct LogMoments {
    pub m1: f64,
    pub m2: f64,
    pub k: usize,
}

/// Moment-estimator bundle from one sample and one tail count.
#[derive(Clone, Copy, Debug)]
pub struct TailEstimates {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub gamma_m: f64,
    pub sigma_m: f64,
    pub k: usize,
    pub n: usize,
}

/// Extreme quantile request: estimate the (1-p)-quantile using k tail points.
#[derive(Clone, Copy, Debug)]
pub struct QuantileQuery {
    pub k: usize,
    pub p: f64,
}

impl QuantileQuery {
    /// Validates `1 <= k < n` and `0 < p <= k/n`, i.e. `d_n = k/(np) >= 1`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k < 1 || self.k >= n {
            return Err(Error::InvalidK { k: self.k, n });
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(Error::InvalidQuery {
                reason: format!("p = {} is not in (0, k/n]", self.p),
            });
        }
        if self.p > self.k as f64 / n as f64 {
            return Err(Error::InvalidQuery {
                reason: format!(
                    "p = {} exceeds k/n = {}; extrapolation requires d_n >= 1",
                    self.p,
                    self.k as f64 / n as f64
                ),
            });
        }
        Ok(())
    }
}

/// Log-spacing moments m1, m2 for the top k order statistics.
pub fn log_moments(sample: &OrderedSample, k: usize) -> Result<LogMoments> {
    let n = sample.n();
    if k < 1 || k >= n {
        return Err(Error::InvalidK { k, n });
    }
    let values = sample.values();
    let base = values[n - 1 - k];
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for j in 0..k {
        let spacing = (values[n - 1 - j] / base).ln();
        m1 += spacing;
        m2 += spacing * spacing;
    }
    m1 /= k as f64;
    m2 /= k as f64;
    Ok(LogMoments { m1, m2, k })
}

/// The moment estimator of the extreme value index and its scale companion.
///
/// Errors with `DegenerateTail` when the second log-moment vanishes or when
/// m1^2 = m2 (all k log-spacings equal): both make `(1 - m1^2/m2)^{-1}` a
/// division by zero, so the estimator is undefined rather than defaulted.
pub fn moment_estimates(sample: &OrderedSample, k: usize) -> Result<TailEstimates> {
    let lm = log_moments(sample, k)?;
    if lm.m2 <= 0.0 {
        return Err(Error::DegenerateTail { k });
    }
    let ratio = lm.m1 * lm.m1 / lm.m2;
    let denom = 1.0 - ratio;
    if denom <= 0.0 {
        return Err(Error::DegenerateTail { k });
    }
    let gamma_plus = lm.m1;
    let gamma_minus = 1.0 - 0.5 / denom;
    let gamma_m = gamma_plus + gamma_minus;
    let sigma_m = sample.tail_threshold(k)? * lm.m1 * (1.0 - gamma_minus);
    Ok(TailEstimates {
        gamma_plus,
        gamma_minus,
        gamma_m,
        sigma_m,
        k,
        n: sample.n(),
    })
}

/// `(d^gamma - 1)/gamma`, evaluated as `ln d` in the analytic limit
/// `|gamma| < 1e-9` to avoid catastrophic cancellation.
pub fn power_ratio(gamma: f64, d: f64) -> f64 {
    let ln_d = d.ln();
    if gamma.abs() < GAMMA_ZERO_EPS {
        ln_d
    } else {
        (gamma * ln_d).exp_m1() / gamma
    }
}

/// Plug-in extreme quantile estimate
/// `x_p = Y_{n-k,n} + sigma_M (d_n^gamma_M - 1)/gamma_M`.
pub fn extreme_quantile(sample: &OrderedSample, query: &QuantileQuery) -> Result<f64> {
    query.validate(sample.n())?;
    let est = moment_estimates(sample, query.k)?;
    let d_n = est.k as f64 / (est.n as f64 * query.p);
    Ok(sample.tail_threshold(query.k)? + est.sigma_m * power_ratio(est.gamma_m, d_n))
}

/// The extrapolation sensitivity integral `q_gamma(t) = int_1^t s^(gamma-1) ln s ds`.
///
/// Closed form: for gamma != 0, `(t^g ln t)/g - (t^g - 1)/g^2`; at gamma = 0,
/// `(ln t)^2 / 2`. Evaluated through expm1 so the two branches agree to
/// machine-level accuracy across the gamma = 0 switch.
pub fn q_gamma(gamma: f64, t: f64) -> Result<f64> {
    if t.is_nan() || t < 1.0 {
        return Err(Error::InvalidArgument {
            reason: format!("q_gamma requires t >= 1, got {t}"),
        });
    }
    if t == 1.0 {
        return Ok(0.0);
    }
    let l = t.ln();
    if gamma.abs() < GAMMA_ZERO_EPS {
        return Ok(0.5 * l * l);
    }
    let x = gamma * l;
    Ok((l / gamma) * (x.exp() - x.exp_m1() / x))
}

/// Leading-order behavior of `q_gamma` as t grows:
/// `t^g ln t / g` (g > 0), `(ln t)^2 / 2` (g = 0), `1/g^2` (g < 0).
pub fn q_gamma_asymptotic(gamma: f64, t: f64) -> Result<f64> {
    if t.is_nan() || t <= 1.0 {
        return Err(Error::InvalidArgument {
            reason: format!("q_gamma_asymptotic requires t > 1, got {t}"),
        });
    }
    if gamma.abs() < GAMMA_ZERO_EPS {
        let l = t.ln();
        Ok(0.5 * l * l)
    } else if gamma > 0.0 {
        Ok(t.powf(gamma) * t.ln() / gamma)
    } else {
        Ok(1.0 / (gamma * gamma))
    }
}

/// One step of a decay-condition schedule: sample size, tail count, error rate.
#[derive(Clone, Copy, Debug)]
pub struct ScheduleStep {
    pub n: f64,
    pub k: f64,
    pub h: f64,
}

/// Finite-schedule evaluation of the error-decay conditions.
#[derive(Clone, Debug)]
pub struct DecayReport {
    /// Human-readable form of the condition sequence that was evaluated.
    pub condition: String,
    /// The condition sequence along the schedule.
    pub values: Vec<f64>,
    /// True when the last value is below half the first value.
    pub decaying: bool,
    /// Reminder that a finite schedule cannot certify a limit.
    pub note: &'static str,
}

/// Evaluates, along a schedule of (n, k_n, h_n), the sequence whose decay is
/// sufficient for the scaled error to vanish:
///
/// * gamma > 0: `sqrt(k) h_n`
/// * gamma = 0: `sqrt(k) h_n (n/k)^delta` (delta supplied by the caller)
/// * gamma < 0: `sqrt(k) h_n (n/k)^(-gamma)`
///
/// This is a diagnostic aid over a finite grid, not a proof of a limit.
pub fn check_decay_conditions(
    gamma: f64,
    schedule: &[ScheduleStep],
    delta: Option<f64>,
) -> Result<DecayReport> {
    if schedule.len() < 2 {
        return Err(Error::InvalidSchedule {
            reason: "need at least two schedule points".into(),
        });
    }
    for (i, s) in schedule.iter().enumerate() {
        // the negated compound also rejects NaN inputs
        if !(s.n > 0.0 && s.n.is_finite() && s.k >= 1.0 && s.k < s.n && s.h >= 0.0) {
            return Err(Error::InvalidSchedule {
                reason: format!("step {i}: require 0 < k < n finite and h >= 0"),
            });
        }
    }
    for w in schedule.windows(2) {
        if w[1].n <= w[0].n {
            return Err(Error::InvalidSchedule {
                reason: "n must be strictly increasing".into(),
            });
        }
    }
    let first = &schedule[0];
    let last = &schedule[schedule.len() - 1];
    if last.k / last.n >= first.k / first.n {
        return Err(Error::InvalidSchedule {
            reason: "k/n does not shrink along the schedule".into(),
        });
    }

    let (condition, exponent) = if gamma > 0.0 {
        ("sqrt(k) h".to_string(), 0.0)
    } else if gamma == 0.0 {
        let d = delta.ok_or_else(|| Error::InvalidSchedule {
            reason: "gamma = 0 requires a caller-supplied delta > 0".into(),
        })?;
        if d.is_nan() || d <= 0.0 {
            return Err(Error::InvalidSchedule {
                reason: "delta must be positive".into(),
            });
        }
        (format!("sqrt(k) h (n/k)^{d}"), d)
    } else {
        (format!("sqrt(k) h (n/k)^{}", -gamma), -gamma)
    };

    let values: Vec<f64> = schedule
        .iter()
        .map(|s| s.k.sqrt() * s.h * (s.n / s.k).powf(exponent))
        .collect();
    let decaying = values[values.len() - 1] < 0.5 * values[0];
    Ok(DecayReport {
        condition,
        values,
        decaying,
        note: "finite-schedule diagnostic; cannot certify a limit",
    })
}
