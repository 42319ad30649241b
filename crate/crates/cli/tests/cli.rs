//! End-to-end runs of the `mf` binary: exit-code contract, artifact
//! emission and reproducibility across processes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn mf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mf"))
}

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(tag);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).expect("create tmp dir");
    dir
}

#[test]
fn simulate_completes_with_exit_zero() {
    let out = tmp_dir("simulate");
    let status = mf()
        .args([
            "simulate",
            scenario_path("gradient_flow.json").to_str().unwrap(),
        ])
        .args(["--out", out.to_str().unwrap()])
        .status()
        .expect("spawn mf");
    assert_eq!(status.code(), Some(0));
    assert!(out.join("gradient-flow_trajectory.csv").exists());
    assert!(out.join("gradient-flow_summary.json").exists());
}

#[test]
fn invariance_pass_and_fail_codes() {
    let out = tmp_dir("invariance");
    let pass = mf()
        .args([
            "check-invariance",
            scenario_path("sweeping_ball.json").to_str().unwrap(),
        ])
        .args(["--variant", "normal-inf", "--out", out.to_str().unwrap()])
        .status()
        .expect("spawn mf");
    assert_eq!(pass.code(), Some(0), "invariant system must exit 0");
    let fail = mf()
        .args([
            "check-invariance",
            scenario_path("drift_counterexample.json").to_str().unwrap(),
        ])
        .args(["--out", out.to_str().unwrap()])
        .status()
        .expect("spawn mf");
    assert_eq!(fail.code(), Some(1), "violated criterion must exit 1");
    let report =
        std::fs::read_to_string(out.join("drift-counterexample_invariance_normal-inf.json"))
            .expect("report written");
    assert!(report.contains("\"verdict\": \"fail\""));
}

#[test]
fn lyapunov_check_passes() {
    let out = tmp_dir("lyapunov");
    let status = mf()
        .args([
            "check-lyapunov",
            scenario_path("gradient_flow.json").to_str().unwrap(),
        ])
        .args(["--variant", "subgrad-inf", "--out", out.to_str().unwrap()])
        .status()
        .expect("spawn mf");
    assert_eq!(status.code(), Some(0));
}

#[test]
fn broken_scenarios_exit_two() {
    let out = tmp_dir("broken");
    let missing = mf()
        .args([
            "simulate",
            "no/such/file.json",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .expect("spawn mf");
    assert_eq!(missing.code(), Some(2), "I/O failure must exit 2");
    let bad = out.join("bad.json");
    std::fs::write(
        &bad,
        r#"{
            "name": "bad", "dimension": 2,
            "operator": {"kind": "quadratic_gradient", "q": [[1.0, 0.0], [0.0, -0.5]], "b": [0.0, 0.0]},
            "cusco": {"kind": "singleton", "map": {"linear": [[0.0,0.0],[0.0,0.0]], "offset": [0.0, 0.0]}}
        }"#,
    )
    .unwrap();
    let schema = mf()
        .args([
            "simulate",
            bad.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .expect("spawn mf");
    assert_eq!(
        schema.status.code(),
        Some(2),
        "schema violation must exit 2"
    );
    let stderr = String::from_utf8_lossy(&schema.stderr);
    assert!(stderr.contains("not PSD"), "stderr: {stderr}");
}

#[test]
fn sweep_writes_convergence_table() {
    let out = tmp_dir("sweep");
    let status = mf()
        .args([
            "sweep",
            scenario_path("gradient_flow.json").to_str().unwrap(),
        ])
        .args(["--param", "h", "--values", "1e-2,1e-3,1e-4"])
        .args(["--out", out.to_str().unwrap()])
        .status()
        .expect("spawn mf");
    assert_eq!(status.code(), Some(0));
    let table = std::fs::read_to_string(out.join("gradient-flow_sweep_h.csv")).unwrap();
    assert_eq!(
        table.trim_end().lines().count(),
        4,
        "header plus three rows"
    );
}

#[test]
fn reports_are_reproducible_across_processes() {
    let out_a = tmp_dir("repro-a");
    let out_b = tmp_dir("repro-b");
    for out in [&out_a, &out_b] {
        let status = mf()
            .args([
                "check-invariance",
                scenario_path("sweeping_ball.json").to_str().unwrap(),
            ])
            .args([
                "--variant",
                "normal-projected",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .expect("spawn mf");
        assert_eq!(status.code(), Some(0));
    }
    let a = std::fs::read(out_a.join("sweeping-ball_invariance_normal-projected.json")).unwrap();
    let b = std::fs::read(out_b.join("sweeping-ball_invariance_normal-projected.json")).unwrap();
    assert_eq!(a, b, "same scenario and seed must be byte-identical");
}
