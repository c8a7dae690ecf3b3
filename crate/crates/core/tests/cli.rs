//! End-to-end tests of the `coconvex` binary: exit codes, report files and
//! the determinism contract.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coconvex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report_json(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("report.json")).expect("report.json written");
    serde_json::from_str(&text).expect("report parses")
}

#[test]
fn selftest_passes_and_writes_schema_versioned_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["selftest", "--out", dir.path().to_str().unwrap(), "--seed", "42"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = report_json(dir.path());
    assert_eq!(report["schema"], "coconvex-report-v1");
    assert_eq!(report["subcommand"], "selftest");
    assert_eq!(report["seed"], 42);
    let verdicts = report["verdicts"].as_array().unwrap();
    assert!(verdicts.len() >= 4);
    assert!(verdicts.iter().all(|v| v["pass"].as_bool().unwrap()), "{verdicts:?}");
}

#[test]
fn solve_writes_field_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "[problem]\np = 1.0\nq = 3.0\n[grid]\nn = 33\n").unwrap();
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    for out in [&out1, &out2] {
        let res = run(&["solve", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
        assert!(out.join("field.csv").exists());
    }
    // Identical config + seed => bit-identical reports and fields.
    assert_eq!(
        std::fs::read(out1.join("report.json")).unwrap(),
        std::fs::read(out2.join("report.json")).unwrap()
    );
    assert_eq!(
        std::fs::read(out1.join("field.csv")).unwrap(),
        std::fs::read(out2.join("field.csv")).unwrap()
    );
    let report = report_json(&out1);
    assert!(report["sections"]["solve"]["converged"].as_bool().unwrap());
}

#[test]
fn grid_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "[grid]\nn = 9999\n").unwrap();
    let res = run(&[
        "solve",
        "--config",
        config.to_str().unwrap(),
        "--grid",
        "17",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let report = report_json(dir.path());
    assert_eq!(report["config"]["grid"]["n"], 17);
}

#[test]
fn invalid_regime_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    // p < 1 with q < n is outside every regime in the classification table.
    std::fs::write(&config, "[problem]\np = 0.0\nq = 2.0\neps = 0.1\n").unwrap();
    let res = run(&["solve", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let res = run(&["solve", "--config", "/nonexistent/path.toml"]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn oracle_writes_radial_profile() {
    let dir = tempfile::tempdir().unwrap();
    let res = run(&["oracle", "--out", dir.path().to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let profile = std::fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert!(profile.starts_with("r,u,du"), "header: {}", profile.lines().next().unwrap_or(""));
}

#[test]
fn holder_reports_exponent_fit() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "[grid]\nn = 129\n[holder]\nprobe = \"all_nodes\"\nband = [0.85, 1.05]\nmin_r_squared = 0.9\n",
    )
    .unwrap();
    let res = run(&["holder", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let report = report_json(dir.path());
    let slope = report["sections"]["exponent_fit"]["slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() < 0.15, "slope {slope}");
    assert!(dir.path().join("profile.csv").exists());
}

#[test]
fn barriers_subcommand_certifies_subsolution() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "[problem]\np = 0.0\nq = 3.0\neps = 0.5\n[domain]\nkind = \"disk\"\nradius = 0.5\n[grid]\nn = 33\n",
    )
    .unwrap();
    let res = run(&["barriers", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let cert = std::fs::read_to_string(dir.path().join("certificate.csv")).unwrap();
    assert!(cert.starts_with("node_index,x1,x2,margin"));
    let report = report_json(dir.path());
    assert!(report["sections"]["certificate"]["pass"].as_bool().unwrap());
}
