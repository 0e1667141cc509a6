use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gqe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gqe")).args(args).output().expect("binary runs")
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap()
}

#[test]
fn example_passes_and_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (out, csv) = (dir.path().join("r.json"), dir.path().join("r.csv"));
    let o = gqe(&["example", "2", "--n", "4", "--out", out.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["overall_pass"], true);
    assert_eq!(r["config"]["n"], 4);
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    // the timestamp is the last field so it can be dropped line-wise
    let raw = std::fs::read_to_string(&out).unwrap();
    let last_field = raw.lines().rev().nth(1).unwrap();
    assert!(last_field.trim_start().starts_with("\"timestamp\""), "{last_field}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("r,nu,lambda,S,residual\n"));
    assert_eq!(text.lines().count(), 401);
}

#[test]
fn broken_lambda_fails_with_exit_one() {
    let o = gqe(&["example", "1", "--lambda-offset", "0.1", "--no-timestamp"]);
    assert_eq!(o.status.code(), Some(1));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let failing: Vec<&str> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failing.contains(&"residual") && failing.contains(&"transformed_residual"));
    assert!(!failing.contains(&"traceless_identity"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "n = 5\nseed = 3\n[grid]\nr_count = 6\n[tolerances]\nresidual = 1e-9\n").unwrap();
    let o = gqe(&["example", "1", "--config", cfg.to_str().unwrap(), "--n", "3", "--no-timestamp"]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["config"]["n"], 3);
    assert_eq!(r["seed"], 3);
    assert_eq!(r["tolerances"]["residual"], 1e-9);
    assert!(r.get("timestamp").is_none());
}

#[test]
fn usage_and_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "colour = 1\n").unwrap();
    for args in [
        vec!["example", "1", "--config", bad.to_str().unwrap()],
        vec!["example", "1", "--n", "2"],
        vec!["example", "7"],
        vec!["example", "1", "--out", "/nonexistent/dir/r.json"],
        vec!["verify", "--phi", "exp(-r^2"],
        vec!["verify", "--phi", "unknownfn(r)"],
        vec!["models", "--set", "tolerances.oracle=0"],
        vec!["frobnicate"],
    ] {
        assert_eq!(gqe(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn parse_check_reports_position() {
    let o = gqe(&["parse-check", "1+(r*"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("position"));
    let ok = gqe(&["parse-check", "exp(-r^2/2)", "--at", "1"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("canonical"));
}

#[test]
fn remaining_subcommands_pass() {
    for args in [
        vec!["invariants", "--set", "grid.r_count=10"],
        vec!["curvature", "--family", "translation", "--phi", "tanh-step", "--f", "u"],
        vec!["sphere-witness", "--v", "1"],
        vec!["karp", "--example", "2", "--radii", "0.5,1"],
        vec!["complete-check", "--example", "3", "--n", "4"],
        vec!["models", "--rho", "2"],
    ] {
        let o = gqe(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
