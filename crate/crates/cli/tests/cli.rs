use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use batchsim_core::experiment::ExperimentConfig;

const SMALL: &str = r#"
n_instances = 3
mtime = 5000.0

[workload]
scenario = "face"
seed = 4
duration = 30000.0

[workload.iat]
kind = "burst"
burst_size = 4
intra_gap = 10.0
inter_gap = 1970.0

[workload.scope]
ws = 5000.0
query_mean_iat = 1000.0

[workload.cost]
kind = "flat_per_type"

[workload.cost.base]
face = 20.0
query = 1.0

[scheduler]
kind = "model_based"
latency_bound = 500.0
"#;

fn batchsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_batchsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn selftest_prints_worked_example() {
    let o = batchsim(&["selftest-fig45"]);
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("gamma_minus = 10"), "{out}");
    assert!(out.contains("gamma_plus = -5"), "{out}");
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("out");
    let o = batchsim(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "9",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "summary.csv",
        "run000/latency.csv",
        "run000/decisions.csv",
        "run000/predictions.csv",
        "run000/transmissions.csv",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("run000,model_based,500,"));
}

#[test]
fn sweep_runs_every_point() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[[sweep]]\nfield = \"n_instances\"\nvalues = [1, 2, 4]\n");
    let cfg = write(dir.path(), "sweep.toml", &text);
    let out = dir.path().join("out");
    let o = batchsim(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(summary.contains("n_instances=4"));
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        &SMALL.replace("n_instances = 3", "n_instances = 0"),
    );
    let o = batchsim(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("n_instances"), "{err}");
}

#[test]
fn missing_config_fails() {
    let o = batchsim(&["run", "--config", "/nonexistent/batchsim.toml"]);
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("error:"));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            cfg.validate().unwrap();
            n += 1;
        }
    }
    assert!(n >= 4);
}

#[test]
fn scheduling_bench_reports_timings() {
    let o = batchsim(&[
        "bench-scheduling-latency",
        "--bins",
        "4",
        "--instances",
        "2",
        "--reps",
        "50",
    ]);
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("median"));
    assert!(out.contains("1000000 entries"));
}
