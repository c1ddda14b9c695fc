use std::path::{Path, PathBuf};
use std::process::ExitCode;

use batchsim_core::experiment::{self, timing, ExperimentConfig, RunSummary};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "batchsim",
    version,
    about = "Simulates window scheduling for data-parallel CEP operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration, ignoring any sweep it declares.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the workload seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every point of the configuration's sweep.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the gains and queue peaks of the seven-event worked example.
    #[command(name = "selftest-fig45")]
    SelftestFig45,
    /// Time model-based scheduling decisions and statistics updates on this host.
    BenchSchedulingLatency {
        /// Bins per distribution.
        #[arg(long, default_value_t = 32)]
        bins: usize,
        #[arg(long, default_value_t = 8)]
        instances: usize,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
    },
}

fn load(config: &Path, seed: Option<u64>) -> batchsim_core::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.workload.seed = s;
    }
    Ok(cfg)
}

fn print_rows(rows: &[RunSummary]) {
    println!("run_id,scheduler,param,max_lo,p99_lo,transmissions,violations,label");
    for r in rows {
        println!(
            "{},{},{},{:.3},{:.3},{},{},{}",
            r.run_id,
            r.scheduler,
            r.param,
            r.max_lo,
            r.p99_lo,
            r.transmissions,
            r.violations,
            r.label
        );
    }
}

fn execute(cmd: Command) -> batchsim_core::Result<()> {
    match cmd {
        Command::Run { config, seed, out } => {
            let mut cfg = load(&config, seed)?;
            cfg.sweep.clear();
            let o = experiment::run_experiment(&cfg, out.as_deref())?;
            print_rows(&o.rows);
            eprintln!("wrote {}", o.output_dir.display());
        }
        Command::Sweep { config, seed, out } => {
            let cfg = load(&config, seed)?;
            let o = experiment::run_experiment(&cfg, out.as_deref())?;
            if let Some(p) = o.baseline_peak {
                eprintln!("round-robin peak lambda_o = {p:.3}");
            }
            print_rows(&o.rows);
            eprintln!("wrote {}", o.output_dir.display());
        }
        Command::SelftestFig45 => {
            println!("{}", experiment::selftest_worked_example()?);
        }
        Command::BenchSchedulingLatency {
            bins,
            instances,
            reps,
        } => {
            let lat = timing::scheduling_latencies(bins, instances.max(1), reps.max(1));
            let med = timing::median(lat.clone());
            let max = lat.iter().max().copied().unwrap_or_default();
            println!("scheduling decision ({bins} bins, {instances} instances): median {med:?}, max {max:?}");
            for n in [100_000, 1_000_000] {
                let t = timing::monitoring_update_time(n, bins, 3);
                println!("monitoring update, {n} entries: {t:?}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
