//! Aggregation of replication records into per-n statistics, log-log slope
//! diagnostics, and pass/fail verdicts.

use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig, Plan};
use crate::experiments::{payload_columns, GridContext, Outcome, ReplicationRecord};

#[derive(Serialize, Clone, Debug)]
pub struct StatSummary {
    pub name: String,
    pub mean: f64,
    pub median: f64,
    pub p5: f64,
    pub p95: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
}

#[derive(Serialize, Clone, Debug)]
pub struct PerNSummary {
    pub n: usize,
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_n: Option<f64>,
    /// sqrt(k) Q(n/k): size of the second-order term at this grid point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sqrt_k_q: Option<f64>,
    pub records: usize,
    pub failures: usize,
    pub stats: Vec<StatSummary>,
}

/// Least-squares fit of ln(median statistic) against ln n; diagnostics only.
#[derive(Serialize, Clone, Debug)]
pub struct SlopeFit {
    pub stat: String,
    pub slope: f64,
    pub residual_stderr: f64,
    pub points: usize,
}

#[derive(Serialize, Clone, Debug)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub observed: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Serialize, Clone, Debug)]
pub struct SummaryReport {
    pub experiment: String,
    pub tool_version: String,
    pub model: String,
    pub true_gamma: f64,
    pub per_n: Vec<PerNSummary>,
    pub slopes: Vec<SlopeFit>,
    pub verdicts: Vec<Verdict>,
    pub all_pass: bool,
    pub warnings: Vec<String>,
    pub thresholds_note: String,
    pub config: ExperimentConfig,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let idx = ((q * sorted.len() as f64) as usize).min(sorted.len() - 1);
    sorted[idx]
}

fn median(sorted: &[f64]) -> f64 {
    percentile(sorted, 0.5)
}

/// RMSE target per payload column, where a ground truth exists.
fn rmse_target(experiment: Experiment, column: &str, true_gamma: f64) -> Option<f64> {
    match (experiment, column) {
        (Experiment::UniConsistency, "gamma_m") => Some(true_gamma),
        (Experiment::UniConsistency, "quantile_rel_err") => Some(0.0),
        _ => None,
    }
}

pub fn summarize(
    cfg: &ExperimentConfig,
    plan: &Plan,
    contexts: &[GridContext],
    records: &[ReplicationRecord],
    warnings: Vec<String>,
) -> SummaryReport {
    let columns = payload_columns(cfg.experiment);
    let true_gamma = plan.model.gamma();

    let mut per_n = Vec::with_capacity(contexts.len());
    for ctx in contexts {
        let n = ctx.point.n;
        let of_n: Vec<&ReplicationRecord> = records.iter().filter(|r| r.n == n).collect();
        let failures = of_n
            .iter()
            .filter(|r| matches!(r.outcome, Outcome::Failed(_)))
            .count();
        let mut stats = Vec::with_capacity(columns.len());
        for (ci, &name) in columns.iter().enumerate() {
            let mut values: Vec<f64> = of_n
                .iter()
                .filter_map(|r| match &r.outcome {
                    Outcome::Values(v) => Some(v[ci]),
                    Outcome::Failed(_) => None,
                })
                .collect();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let count = values.len();
            let mean = if count == 0 {
                f64::NAN
            } else {
                values.iter().sum::<f64>() / count as f64
            };
            let rmse = rmse_target(cfg.experiment, name, true_gamma).map(|target| {
                if count == 0 {
                    f64::NAN
                } else {
                    (values
                        .iter()
                        .map(|v| (v - target) * (v - target))
                        .sum::<f64>()
                        / count as f64)
                        .sqrt()
                }
            });
            stats.push(StatSummary {
                name: name.to_string(),
                mean,
                median: median(&values),
                p5: percentile(&values, 0.05),
                p95: percentile(&values, 0.95),
                rmse,
            });
        }
        per_n.push(PerNSummary {
            n,
            k: ctx.point.k,
            p: ctx.point.p,
            h: ctx.point.h,
            z_n: ctx.z_n,
            sqrt_k_q: ctx.sqrt_k_q,
            records: of_n.len(),
            failures,
            stats,
        });
    }

    let slopes = fit_slopes(columns, &per_n);
    let verdicts = build_verdicts(cfg, plan, &per_n, records);
    let all_pass = !verdicts.is_empty() && verdicts.iter().all(|v| v.pass);

    SummaryReport {
        experiment: cfg.experiment.name().to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        model: plan.model.name(),
        true_gamma,
        per_n,
        slopes,
        verdicts,
        all_pass,
        warnings,
        thresholds_note: "verdict thresholds are desk-scale engineering choices for finite-n \
                          runs, not theoretical claims; tune them in the config's 'verdict' block"
            .to_string(),
        config: cfg.clone(),
    }
}

fn fit_slopes(columns: &[&str], per_n: &[PerNSummary]) -> Vec<SlopeFit> {
    let mut out = Vec::new();
    if per_n.len() < 3 {
        return out;
    }
    for (ci, &name) in columns.iter().enumerate() {
        let pairs: Vec<(f64, f64)> = per_n
            .iter()
            .filter_map(|s| {
                let m = s.stats[ci].median;
                (m.is_finite() && m > 0.0).then(|| ((s.n as f64).ln(), m.ln()))
            })
            .collect();
        if pairs.len() < 3 {
            continue;
        }
        let m = pairs.len() as f64;
        let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / m;
        let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = pairs.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
        let sxy: f64 = pairs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
        if sxx == 0.0 {
            continue;
        }
        let slope = sxy / sxx;
        let sse: f64 = pairs
            .iter()
            .map(|p| {
                let fit = mean_y + slope * (p.0 - mean_x);
                (p.1 - fit) * (p.1 - fit)
            })
            .sum();
        let residual_stderr = if pairs.len() > 2 {
            (sse / (m - 2.0)).sqrt()
        } else {
            0.0
        };
        out.push(SlopeFit {
            stat: name.to_string(),
            slope,
            residual_stderr,
            points: pairs.len(),
        });
    }
    out
}

fn column_index(experiment: Experiment, name: &str) -> usize {
    payload_columns(experiment)
        .iter()
        .position(|&c| c == name)
        .expect("known column")
}

fn build_verdicts(
    cfg: &ExperimentConfig,
    plan: &Plan,
    per_n: &[PerNSummary],
    records: &[ReplicationRecord],
) -> Vec<Verdict> {
    let mut verdicts = Vec::new();
    if records.is_empty() {
        verdicts.push(Verdict {
            name: "no-data".to_string(),
            pass: false,
            observed: 0.0,
            threshold: 1.0,
            detail: "no replication records were produced".to_string(),
        });
        return verdicts;
    }
    let v = plan.verdict;
    match cfg.experiment {
        Experiment::UniConsistency => {
            let ci = column_index(cfg.experiment, "gamma_m");
            let worst = per_n
                .iter()
                .map(|s| (s.stats[ci].median - plan.model.gamma()).abs())
                .fold(f64::NAN, f64::max);
            verdicts.push(Verdict {
                name: "index-median-within-tolerance".to_string(),
                pass: worst <= v.index_tolerance,
                observed: worst,
                threshold: v.index_tolerance,
                detail: format!(
                    "max over n of |median gamma_m - gamma|; medians: {:?}",
                    per_n.iter().map(|s| s.stats[ci].median).collect::<Vec<_>>()
                ),
            });
        }
        Experiment::ErrorPropagation => {
            for name in payload_columns(cfg.experiment) {
                let ci = column_index(cfg.experiment, name);
                let first = per_n.first().map(|s| s.stats[ci].p95).unwrap_or(f64::NAN);
                let last = per_n.last().map(|s| s.stats[ci].p95).unwrap_or(f64::NAN);
                let (observed, pass) = if first == 0.0 {
                    (0.0, last == 0.0)
                } else {
                    (last / first, last <= v.bound_factor * first)
                };
                verdicts.push(Verdict {
                    name: format!("bounded-{name}"),
                    pass,
                    observed,
                    threshold: v.bound_factor,
                    detail: format!("p95 ratio last/first; p95 first = {first}, last = {last}"),
                });
            }
        }
        Experiment::RatioBound => {
            let ci = column_index(cfg.experiment, "max_ratio_scaled");
            let first = per_n.first().map(|s| s.stats[ci].p95).unwrap_or(f64::NAN);
            let last = per_n.last().map(|s| s.stats[ci].p95).unwrap_or(f64::NAN);
            let (observed, pass) = if first == 0.0 {
                (0.0, last == 0.0)
            } else {
                (last / first, last <= v.bound_factor * first)
            };
            verdicts.push(Verdict {
                name: "bounded-max-ratio".to_string(),
                pass,
                observed,
                threshold: v.bound_factor,
                detail: format!("p95 ratio last/first; p95 first = {first}, last = {last}"),
            });
        }
        Experiment::EllipticalConsistency => {
            let ci = column_index(cfg.experiment, "sym_diff_ratio");
            let medians: Vec<f64> = per_n.iter().map(|s| s.stats[ci].median).collect();
            let monotone = medians.windows(2).all(|w| w[1] <= w[0]);
            let worst_step = medians
                .windows(2)
                .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
                .fold(0.0f64, f64::max);
            verdicts.push(Verdict {
                name: "ratio-median-decreasing".to_string(),
                pass: monotone,
                observed: worst_step,
                threshold: 1.0,
                detail: format!("medians across the grid: {medians:?}"),
            });
            let final_median = *medians.last().unwrap_or(&f64::NAN);
            verdicts.push(Verdict {
                name: "final-ratio-below-threshold".to_string(),
                pass: final_median <= v.ratio_threshold,
                observed: final_median,
                threshold: v.ratio_threshold,
                detail: "median symmetric-difference mass over p at the largest n".to_string(),
            });
        }
    }
    verdicts
}
