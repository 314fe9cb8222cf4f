//! CSV and JSON serialization of run results.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::estimators::EstimateRecord;

pub const CSV_HEADER: [&str; 16] = [
    "run_id",
    "n",
    "depth",
    "kind",
    "q",
    "p",
    "estimator",
    "bitstring",
    "value",
    "std_error",
    "reference",
    "bound",
    "verdict",
    "margin",
    "samples",
    "seed",
];

/// Artifact version: crate version plus `git describe` at build time.
pub fn artifact_version() -> String {
    format!("{}+{}", env!("CARGO_PKG_VERSION"), env!("RCS_GIT_DESCRIBE"))
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn write_records<W: Write>(out: W, config: &ExperimentConfig, records: &[EstimateRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    let run_id = config.run_id();
    let (n, depth, seed) = (config.n.to_string(), config.depth.to_string(), config.seed.to_string());
    let kind = config.channel.kind.as_str();
    let (q, p) = (fmt_float(config.channel.q), fmt_float(config.channel.p));
    for r in records {
        w.write_record([
            run_id.as_str(),
            &n,
            &depth,
            kind,
            &q,
            &p,
            &r.estimator,
            &r.bitstring,
            &fmt_float(r.value),
            &fmt_float(r.std_error),
            &fmt_opt(r.reference),
            &fmt_opt(r.bound),
            r.verdict.as_str(),
            &fmt_opt(r.margin),
            &r.samples.to_string(),
            &seed,
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn records_to_string(config: &ExperimentConfig, records: &[EstimateRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_records(&mut buf, config, records)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[derive(Debug, Serialize)]
pub struct Sidecar<'a> {
    pub run_id: String,
    pub version: String,
    pub margin: f64,
    pub config: &'a ExperimentConfig,
    pub rows: usize,
    pub failures: usize,
}

impl<'a> Sidecar<'a> {
    pub fn new(config: &'a ExperimentConfig, margin: f64, records: &[EstimateRecord]) -> Self {
        Self {
            run_id: config.run_id(),
            version: artifact_version(),
            margin,
            config,
            rows: records.len(),
            failures: records
                .iter()
                .filter(|r| r.verdict == super::estimators::Verdict::Fail)
                .count(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
