use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::Millis;
use crate::runtime::RunMetrics;

pub const LATENCY_CSV: &str = "latency.csv";
pub const DECISIONS_CSV: &str = "decisions.csv";
pub const PREDICTIONS_CSV: &str = "predictions.csv";
pub const TRANSMISSIONS_CSV: &str = "transmissions.csv";
pub const SUMMARY_CSV: &str = "summary.csv";

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub scheduler: String,
    pub param: f64,
    pub max_lo: Millis,
    pub p99_lo: Millis,
    pub transmissions: u64,
    /// Samples above the evaluation bound; 0 when there is no bound.
    pub violations: u64,
    /// Swept field values of this run.
    pub label: String,
    pub bound: Option<Millis>,
    pub events_within: f64,
    pub n_events: u64,
}

impl RunSummary {
    pub fn new(run_id: &str, label: &str, bound: Option<Millis>, m: &RunMetrics) -> Self {
        let v = bound.map(|b| m.violations(b));
        RunSummary {
            run_id: run_id.to_string(),
            scheduler: m.scheduler.to_string(),
            param: m.parameter,
            max_lo: m.max_lambda_o(),
            p99_lo: m.percentile_lambda_o(99.0),
            transmissions: m.transmissions,
            violations: v.map_or(0, |v| v.count),
            label: label.to_string(),
            bound,
            events_within: v.map_or(1.0, |v| v.events_within),
            n_events: m.n_events,
        }
    }
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the per-run detail files into `dir`, creating it if needed.
pub fn write_run(dir: &Path, m: &RunMetrics) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut w = writer(&dir.join(LATENCY_CSV))?;
    w.write_record(["seq", "instance", "lambda_q", "lambda_p", "lambda_o", "ts"])?;
    for s in &m.samples {
        w.write_record([
            s.event_seq.to_string(),
            s.instance.to_string(),
            s.lambda_q.to_string(),
            s.lambda_p.to_string(),
            s.lambda_o.to_string(),
            s.ts.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(dir, e))?;

    let mut w = writer(&dir.join(DECISIONS_CSV))?;
    w.write_record([
        "wid",
        "instance",
        "predicted_lambda_o_max",
        "kind",
        "open_ts",
        "advanced",
        "observed_latency",
    ])?;
    for d in &m.decisions {
        w.write_record([
            d.wid.to_string(),
            d.instance.to_string(),
            opt(d.predicted_lambda_o_max),
            d.kind.to_string(),
            d.open_ts.to_string(),
            d.advanced.to_string(),
            opt(d.observed_latency),
        ])?;
    }
    w.flush().map_err(|e| Error::io(dir, e))?;

    let mut w = writer(&dir.join(PREDICTIONS_CSV))?;
    w.write_record([
        "wid",
        "instance",
        "theta_hat",
        "theta_bar",
        "n",
        "gamma_minus",
        "gamma_plus",
        "alpha",
        "lambda_q_init",
        "lambda_q_max",
        "lambda_p_max",
        "lambda_o_max",
    ])?;
    for p in &m.predictions {
        let q = &p.prediction;
        w.write_record([
            p.wid.to_string(),
            p.instance.to_string(),
            q.theta_hat.to_string(),
            q.theta_bar.to_string(),
            q.n.to_string(),
            q.gamma_minus.to_string(),
            q.gamma_plus.to_string(),
            q.alpha.to_string(),
            q.lambda_q_init.to_string(),
            q.lambda_q_max.to_string(),
            q.lambda_p_max.to_string(),
            q.lambda_o_max.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(dir, e))?;

    let mut w = writer(&dir.join(TRANSMISSIONS_CSV))?;
    w.write_record(["instance", "transmissions"])?;
    for (i, n) in m.processed_per_instance().iter().enumerate() {
        w.write_record([i.to_string(), n.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(dir, e))?;
    Ok(())
}

/// Writes `summary.csv` into `dir` through a temporary file and a rename, so
/// readers never see a partially written table.
pub fn write_summary(dir: &Path, rows: &[RunSummary]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(SUMMARY_CSV);
    let tmp = dir.join(format!(".{SUMMARY_CSV}.tmp"));
    {
        let f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut w = csv::Writer::from_writer(f);
        for r in rows {
            w.serialize(r)?;
        }
        let f = w
            .into_inner()
            .map_err(|e| Error::io(&tmp, e.into_error()))?;
        let mut f = f;
        f.flush().map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
}

pub fn read_summary(dir: &Path) -> Result<Vec<RunSummary>> {
    let path = dir.join(SUMMARY_CSV);
    let mut r = csv::Reader::from_path(&path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}
