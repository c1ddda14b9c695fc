//! Config-driven runs, parameter sweeps, CSV output and the small fixed
//! demonstrations used by the command line tool.

mod config;
mod output;
pub mod presets;
mod selftest;
pub mod timing;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{ExperimentConfig, SweepAxis, SweepScale};
pub use output::{
    read_summary, write_run, write_summary, RunSummary, DECISIONS_CSV, LATENCY_CSV,
    PREDICTIONS_CSV, SUMMARY_CSV, TRANSMISSIONS_CSV,
};
pub use selftest::{selftest_worked_example, WorkedExample};

use crate::error::Result;

/// Result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub output_dir: PathBuf,
    pub rows: Vec<RunSummary>,
    /// Peak λ_o of the Round-Robin baseline when a sweep was scaled by it.
    pub baseline_peak: Option<f64>,
}

/// Runs every point of the config's sweep (or the config itself when it has
/// no sweep), writing per-run CSVs under `out/<run_id>/` and `out/summary.csv`.
/// Runs execute in parallel; output order follows the sweep order.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentOutcome> {
    let output_dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_dir.clone());
    let baseline_peak = if cfg.needs_baseline() {
        Some(cfg.round_robin_baseline().run()?.max_lambda_o())
    } else {
        None
    };
    let points = cfg.expand(baseline_peak)?;
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(i, (label, c))| {
            let run_id = format!("run{i:03}");
            let m = c.run()?;
            write_run(&output_dir.join(&run_id), &m)?;
            Ok(RunSummary::new(&run_id, label, c.bound(), &m))
        })
        .collect::<Result<Vec<_>>>()?;
    write_summary(&output_dir, &rows)?;
    Ok(ExperimentOutcome {
        output_dir,
        rows,
        baseline_peak,
    })
}
