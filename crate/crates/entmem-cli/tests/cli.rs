//! End-to-end checks of the binary: artifacts on success, distinct exit
//! codes per failure family, and flag overrides reaching the run.

use std::path::Path;
use std::process::{Command, Output};

fn entmem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entmem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn report_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = entmem(&["report", "--out", dir.path().to_str().unwrap(), "--seed", "5"]);
    assert_code(&out, 0);
    for name in ["fig2.csv", "fringe_input.csv", "fringe_output.csv", "table1.csv", "report.txt"] {
        let path = dir.path().join(name);
        assert!(path.exists(), "{name} missing");
        assert!(path.metadata().unwrap().len() > 0, "{name} empty");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("eta_r"), "summary line missing: {stdout}");
}

#[test]
fn fringe_requires_and_honors_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = entmem(&["fringe", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "missing --stage should be a usage error");

    let out = entmem(&[
        "fringe",
        "--stage",
        "out",
        "--fidelity",
        "analytic",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    assert!(dir.path().join("fringe_output.csv").exists());
    assert!(!dir.path().join("fringe_input.csv").exists());
}

#[test]
fn same_seed_same_bytes_different_seed_different_bytes() {
    let read = |dir: &Path| std::fs::read(dir.join("fringe_input.csv")).unwrap();
    let run = |dir: &Path, seed: &str| {
        let out = entmem(&["fringe", "--stage", "in", "--seed", seed, "--out", dir.to_str().unwrap()]);
        assert_code(&out, 0);
    };
    let (a, b, c) = (
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
    );
    run(a.path(), "21");
    run(b.path(), "21");
    run(c.path(), "22");
    assert_eq!(read(a.path()), read(b.path()));
    assert_ne!(read(a.path()), read(c.path()));
}

#[test]
fn validation_calibration_and_data_failures_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap().to_owned();

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[medium]\noptical_depth = -4\n").unwrap();
    let out = entmem(&["report", "--config", bad.to_str().unwrap(), "--out", &out_dir]);
    assert_code(&out, 2);

    let unreachable = dir.path().join("unreachable.toml");
    std::fs::write(&unreachable, "[calibration]\ntarget_eta_r = 0.9\n").unwrap();
    let out = entmem(&["calibrate", "--config", unreachable.to_str().unwrap(), "--out", &out_dir]);
    assert_code(&out, 3);

    let starved = dir.path().join("starved.toml");
    std::fs::write(&starved, "[fringe]\nheralds_in = 0\n").unwrap();
    let out = entmem(&["fringe", "--stage", "in", "--config", starved.to_str().unwrap(), "--out", &out_dir]);
    assert_code(&out, 4);
}

#[test]
fn calibrate_emits_a_loadable_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = entmem(&["calibrate", "--out", dir.path().to_str().unwrap()]);
    assert_code(&out, 0);
    let produced = dir.path().join("calibrated_config.toml");
    assert!(produced.exists());

    // the calibrated config must round-trip through the binary
    let rerun_dir = tempfile::tempdir().unwrap();
    let out = entmem(&[
        "simulate-eit",
        "--config",
        produced.to_str().unwrap(),
        "--out",
        rerun_dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("eta_r = 0.17"), "calibrated run off target: {stdout}");
}
