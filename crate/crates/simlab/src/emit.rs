//! Output files: `records.csv` (one row per replication, stable column
//! order, floats at 17 significant digits) and `summary.json` (aggregates,
//! slopes, verdicts, config echo). Reruns with the same config and seed are
//! byte-identical regardless of worker count.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::config::ExperimentConfig;
use crate::experiments::{payload_columns, Outcome, ReplicationRecord};
use crate::summary::SummaryReport;
use crate::SimlabError;

/// 17 significant digits, locale-independent.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn records_csv(cfg: &ExperimentConfig, records: &[ReplicationRecord]) -> String {
    let columns = payload_columns(cfg.experiment);
    let mut out = String::new();
    out.push_str("experiment,n,replication,seed,error");
    for c in columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for r in records {
        out.push_str(cfg.experiment.name());
        out.push_str(&format!(",{},{},{}", r.n, r.replication, r.seed));
        match &r.outcome {
            Outcome::Values(values) => {
                out.push(',');
                for v in values {
                    out.push(',');
                    out.push_str(&format_float(*v));
                }
            }
            Outcome::Failed(code) => {
                out.push(',');
                out.push_str(code);
                for _ in 0..columns.len() {
                    out.push(',');
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn summary_json(summary: &SummaryReport) -> Result<String, SimlabError> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    Ok(text)
}

/// Writes records.csv and summary.json into `out_dir` (created if missing).
pub fn emit(
    out_dir: &Path,
    cfg: &ExperimentConfig,
    records: &[ReplicationRecord],
    summary: &SummaryReport,
) -> Result<(), SimlabError> {
    fs::create_dir_all(out_dir)?;
    let mut csv = fs::File::create(out_dir.join("records.csv"))?;
    csv.write_all(records_csv(cfg, records).as_bytes())?;
    let mut json = fs::File::create(out_dir.join("summary.json"))?;
    json.write_all(summary_json(summary)?.as_bytes())?;
    Ok(())
}
