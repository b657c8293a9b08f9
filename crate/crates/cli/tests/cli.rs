//! End-to-end checks of the command-line interface.

use std::path::Path;
use std::process::Command;
use tbacq::channel::{GridFactors, SystemConfig};
use tbacq::harness::{EstimatorKind, ScenarioSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tbacq"))
}

fn small_spec() -> ScenarioSpec {
    let cfg = SystemConfig {
        antennas: 4,
        users: 3,
        carrier_hz: 5.8e9,
        subcarriers: 32,
        cp_len: 4,
        valid_subcarriers: 8,
        first_subcarrier: 4,
        subcarrier_spacing_hz: 15e3,
        symbols_per_slot: 2,
        slots_per_frame: 4,
        max_speed_mps: 2.0,
        pilot_power: 1.0,
        noise_var: 0.01,
        frame_start_slot: 0,
    };
    let mut spec = ScenarioSpec::new(
        cfg,
        GridFactors {
            f_theta: 1,
            f_tau: 1,
            f_nu: 1,
        },
    );
    spec.trials = 2;
    spec.snr_db = vec![10.0, 20.0];
    spec.master_seed = 11;
    spec.generator.on_grid = true;
    spec
}

fn write_spec(dir: &Path, spec: &ScenarioSpec) -> std::path::PathBuf {
    let path = dir.join("spec.json");
    std::fs::write(&path, spec.to_json().unwrap()).unwrap();
    path
}

#[test]
fn sweep_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = write_spec(dir.path(), &small_spec());
    let csv1 = dir.path().join("a.csv");
    let csv2 = dir.path().join("b.csv");
    for out in [&csv1, &csv2] {
        let status = bin()
            .args(["sweep", "--spec"])
            .arg(&spec_path)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&csv1).unwrap();
    let b = std::fs::read(&csv2).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn simulate_schedule_estimate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = small_spec();
    spec.estimator = EstimatorKind::Mmse;
    let spec_path = write_spec(dir.path(), &spec);
    let out_dir = dir.path().join("artifacts");
    let status = bin()
        .args(["simulate", "--spec"])
        .arg(&spec_path)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    for f in [
        "summary.csv",
        "trials.csv",
        "scenario_trial0.json",
        "assignment_trial0.json",
        "schedule_report_trial0.json",
    ] {
        assert!(out_dir.join(f).exists(), "{f} missing");
    }

    // Re-schedule the emitted scenario and estimate with the assignment.
    let scenario = out_dir.join("scenario_trial0.json");
    let status = bin()
        .args(["schedule", "--scenario"])
        .arg(&scenario)
        .args(["--gamma", "0.05"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out_dir.join("assignment.json").exists());

    let output = bin()
        .args(["estimate", "--scenario"])
        .arg(&scenario)
        .arg("--assignment")
        .arg(out_dir.join("assignment.json"))
        .args(["--estimator", "mmse"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("NMSE"), "stdout: {stdout}");
    assert!(out_dir.join("estimate.json").exists());
}

#[test]
fn invalid_spec_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = small_spec();
    spec.config.first_subcarrier = 500;
    let spec_path = write_spec(dir.path(), &spec);
    let status = bin()
        .args(["sweep", "--spec"])
        .arg(&spec_path)
        .arg("--out")
        .arg(dir.path().join("x.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let status = bin()
        .args(["sweep", "--spec", "/nonexistent/spec.json", "--out", "/tmp/x.csv"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
