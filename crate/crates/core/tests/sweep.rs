use std::fs;
use std::process::Command;

use rowsim::sweep::{run_sweep, SweepSpec, DELAY_FILE, METRICS_FILE, METRICS_HEADER, THROUGHPUT_FILE};
use rowsim::{SimConfig, StrategyKind, SweepError};

fn quick() -> SimConfig {
    SimConfig {
        duration: 40.0,
        ..SimConfig::default()
    }
}

#[test]
fn full_grid_writes_one_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SweepSpec::new(dir.path());
    let report = run_sweep(&spec, &quick()).unwrap();
    assert_eq!(report.rows.len(), 150);
    assert_eq!(report.collisions(), 0);
    let text = fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), METRICS_HEADER.join(","));
    assert_eq!(lines.count(), 150);
    // One aggregate row per strategy and rate.
    for f in [DELAY_FILE, THROUGHPUT_FILE] {
        let t = fs::read_to_string(dir.path().join(f)).unwrap();
        assert_eq!(t.lines().count(), 1 + 15, "{f}");
    }
}

#[test]
fn empty_axes_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = SweepSpec::new(dir.path());
    spec.strategies.clear();
    assert!(matches!(run_sweep(&spec, &quick()), Err(SweepError::NoStrategies)));
    let mut spec = SweepSpec::new(dir.path());
    spec.seeds.clear();
    assert!(matches!(run_sweep(&spec, &quick()), Err(SweepError::NoSeeds)));
}

#[test]
fn reruns_are_byte_identical_regardless_of_workers() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut spec = SweepSpec {
        strategies: StrategyKind::ALL.to_vec(),
        lambdas: vec![400.0, 800.0],
        seeds: vec![1, 2, 3],
        out_dir: d1.path().to_path_buf(),
        jobs: Some(1),
    };
    let cfg = SimConfig {
        duration: 90.0,
        ..SimConfig::default()
    };
    run_sweep(&spec, &cfg).unwrap();
    spec.out_dir = d2.path().to_path_buf();
    spec.jobs = Some(3);
    run_sweep(&spec, &cfg).unwrap();
    for f in [METRICS_FILE, DELAY_FILE, THROUGHPUT_FILE] {
        let a = fs::read(d1.path().join(f)).unwrap();
        let b = fs::read(d2.path().join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

fn rowsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rowsim"))
}

#[test]
fn cli_validate_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.cfg");
    fs::write(&good, "lambda = 300\n").unwrap();
    let out = rowsim().arg("validate").arg(&good).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.replace(' ', "") == "lambda=300"), "{text}");

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "dt = -1\n").unwrap();
    let out = rowsim().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt"));
}

#[test]
fn cli_sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.cfg");
    fs::write(&cfg, "duration = 30\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = rowsim()
        .args(["sweep", "--strategies", "rss,coop", "--lambdas", "200", "--seeds", "0,1", "--jobs", "1"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(out_dir.join(METRICS_FILE)).unwrap();
    assert_eq!(text.lines().count(), 1 + 4);
    assert!(text.lines().nth(1).unwrap().starts_with("rss,200,0,"));

    let out = rowsim()
        .args(["sweep", "--strategies", "nope"])
        .arg("--out")
        .arg(dir.path().join("never"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("never").exists());
}

#[test]
fn cli_scenario_prints_entry_order() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/canonical.txt");
    let out = rowsim().args(["scenario", path, "--strategy", "rss"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("rss: B, A, D, C"), "{text}");
}
