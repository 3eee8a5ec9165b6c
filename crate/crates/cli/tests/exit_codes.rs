use std::path::Path;
use std::process::{Command, Output};

fn holonomic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holonomic")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn passing_run_prints_a_report() {
    let out = holonomic(&["stirap"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["scenario"]["kind"], "stirap");
    assert_eq!(report["passed"], true);
}

#[test]
fn tolerance_failure_is_two() {
    let out = holonomic(&["gate", "--steps", "200", "--tolerance", "1e-30"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("check failed"));
}

#[test]
fn config_errors_are_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"kind": "gate", "parameters": {"n": 3, "psi": [1, 0, 0], "phi": "x"}}"#);
    let out = holonomic(&["gate", "--config", &bad]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parameters.phi"));

    let stirap = write(dir.path(), "stirap.json", r#"{"kind": "stirap"}"#);
    assert_eq!(holonomic(&["gate", "--config", &stirap]).status.code(), Some(3));
    assert_eq!(holonomic(&["loop", "--timeseries", "x.csv"]).status.code(), Some(3));
    assert_eq!(holonomic(&["gate", "--method", "berry"]).status.code(), Some(3));
}

#[test]
fn numerical_preconditions_are_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "ms.json",
        r#"{"kind": "morris-shore", "parameters": {"coupling": [[0, 0], [0, 0]]}}"#,
    );
    let out = holonomic(&["morris-shore", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parameters.coupling"));
}

#[test]
fn missing_config_file_is_an_io_error() {
    assert_eq!(holonomic(&["gate", "--config", "/nonexistent/config.json"]).status.code(), Some(1));
}

#[test]
fn out_and_timeseries_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let (report, series) = (dir.path().join("r.json"), dir.path().join("s.csv"));
    let out = holonomic(&[
        "gate",
        "--steps",
        "500",
        "--out",
        report.to_str().unwrap(),
        "--timeseries",
        series.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&report).unwrap();
    let parsed = holonomic_cli::RunReport::from_json(&text).unwrap();
    let csv = std::fs::read_to_string(&series).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,leakage,pop_1,pop_2,pop_3,phase_psi");
    // header, the initial state, then one row per step
    assert_eq!(csv.lines().count(), parsed.methods[0].diagnostics.steps + 2);
}

#[test]
fn selftest_runs_the_acceptance_suite() {
    let out = holonomic(&["selftest"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]") || l.starts_with("[FAIL]")).count(), 10);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
}
