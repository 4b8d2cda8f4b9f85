use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const HEADER: &str = "step,t,E,u_norm_sq,y_norm_sq,multiplier_work,balance_residual";

fn phsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phsim"))
        .args(args)
        .output()
        .expect("spawn phsim")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_accepts_positive_impedance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "imp.json",
        r#"{"system": "wave", "grid": {"counts": [6, 6]},
            "splitting": {"gamma1": ["x+", "y+"]},
            "boundary_condition": {"kind": "impedance-M", "m": 1.5}}"#,
    );
    let o = phsim(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn validate_reports_injectivity_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "w.json",
        r#"{"system": "wave", "grid": {"counts": [9]},
            "splitting": {"gamma1": ["x-", "x+"]},
            "boundary_condition": {"kind": "w", "w1": [[1, 0], [0, 1]], "w2": [[-1, 0], [0, -1]]}}"#,
    );
    let o = phsim(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let failing: Vec<&str> = out.lines().filter(|l| l.contains("FAIL")).collect();
    assert!(failing.iter().any(|l| l.contains("injectivity")), "{out}");
}

#[test]
fn tiny_grid_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "small.json",
        r#"{"system": "wave", "grid": {"counts": [2, 2]},
            "splitting": {"gamma1": []},
            "boundary_condition": {"kind": "clamp"}}"#,
    );
    let o = phsim(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "typo.json",
        r#"{"system": "wave", "grid": {"counts": [5, 5]}, "grdi": 1,
            "splitting": {"gamma1": []},
            "boundary_condition": {"kind": "clamp"}}"#,
    );
    let o = phsim(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let missing = phsim(&["validate", "--config", "/nonexistent/run.json"]);
    assert_eq!(missing.status.code(), Some(2));
    let bad_flag = phsim(&["simulate", "--frobnicate"]);
    assert_eq!(bad_flag.status.code(), Some(2));
}

#[test]
fn simulate_writes_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.json",
        r#"{"system": "wave", "grid": {"counts": [8, 8]},
            "splitting": {"gamma1": ["x+"]},
            "boundary_condition": {"kind": "impedance-M", "m": 1.0},
            "time": {"dt": 0.05, "t_final": 1.0}}"#,
    );
    let out = dir.path().join("trace.csv");
    let o = phsim(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 21);
    for w in rows.windows(2) {
        assert_eq!(w[1].len(), 7);
        assert!(w[1][2] <= w[0][2] * (1.0 + 1e-12));
    }
}

#[test]
fn forced_simulation_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "forced.json",
        r#"{"system": "wave", "grid": {"counts": [7, 7]},
            "splitting": {"gamma1": ["x-"]},
            "boundary_condition": {"kind": "scattering-R"},
            "initial": {"kind": "zero"},
            "input": {"kind": "sine", "face": "x-", "amplitude": 1.0, "frequency": 2.0},
            "time": {"dt": 0.02, "t_final": 0.4}}"#,
    );
    let o = phsim(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some(HEADER));
    assert_eq!(out.lines().count(), 22);
    let last: Vec<f64> = out
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(last[2] > 0.0);
}

#[test]
fn input_without_scattering_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{"system": "wave", "grid": {"counts": [5, 5]},
            "splitting": {"gamma1": ["x-"]},
            "boundary_condition": {"kind": "free"},
            "input": {"kind": "sine", "face": "x-", "amplitude": 1.0, "frequency": 2.0},
            "time": {"dt": 0.1, "t_final": 1.0}}"#,
    );
    let o = phsim(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn injected_fault_is_reported() {
    let o = phsim(&["selftest", "--inject-fault", "sbp-stencil"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o) + &stderr(&o);
    assert!(out.contains("sbp-identity"), "{out}");
}
