use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levy-chaos"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_code(out: &Output) -> String {
    assert!(!out.status.success());
    let v: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    v["error"]["code"].as_str().unwrap().to_string()
}

#[test]
fn coeffs_order_two_gamma_rational() {
    let v = ok_json(&["coeffs", "--n", "2", "--model", "gamma:a=10,b=20", "--mode", "rational"]);
    // m1 = 1/2, m2 = 1/40
    assert_eq!(v["constant"], serde_json::json!(["0", "1/40", "1/4"]));
    assert_eq!(v["moments"], serde_json::json!(["1/2", "1/40"]));
    let pi = v["pi"].as_array().unwrap();
    assert_eq!(pi.len(), 3);
    assert_eq!(pi[0]["tuple"], serde_json::json!([1]));
    // Pi_(1) = 2 C^(1) = 2 m1 t
    assert_eq!(pi[0]["poly"], serde_json::json!(["0", "1"]));
}

#[test]
fn jamshidian_three() {
    let v = ok_json(&["expand", "--n", "3", "--basis", "jamshidian"]);
    let coeffs: Vec<(Vec<u64>, String)> = v["terms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| {
            (
                t["tuple"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect(),
                t["poly"][0].as_str().unwrap().to_string(),
            )
        })
        .collect();
    assert_eq!(
        coeffs,
        vec![
            (vec![3], "1".to_string()),
            (vec![1, 2], "3".to_string()),
            (vec![2, 1], "3".to_string()),
            (vec![1, 1, 1], "6".to_string()),
        ]
    );
}

#[test]
fn expand_h_and_prm() {
    let h = ok_json(&["expand", "--n", "2", "--model", "gamma:a=10,b=20", "--basis", "h"]);
    assert_eq!(h["basis"], "H");
    let prm = ok_json(&["expand", "--n", "2", "--model", "gamma:a=10,b=20", "--basis", "prm"]);
    assert_eq!(prm["integrands"].as_array().unwrap().len(), 3);
}

#[test]
fn ortho_gamma() {
    let v = ok_json(&["ortho", "--n", "3", "--model", "gamma:a=10,b=20"]);
    assert_eq!(v["a"][1][0], "-1/10");
    assert_eq!(v["identity_residual"], 0.0);
    let out = run(&["ortho", "--n", "9", "--model", "gamma:a=10,b=20", "--mode", "float"]);
    assert_eq!(error_code(&out), "combinatorics.order_too_large");
    let out = run(&["ortho", "--n", "2", "--model", "brownian:sigma=0.1"]);
    assert_eq!(error_code(&out), "ortho.degenerate_measure");
}

#[test]
fn verify_writes_diff_csv_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig.csv");
    let args = |p: &Path| {
        vec![
            "verify".to_string(),
            "--model".into(),
            "gamma:a=10,b=20".into(),
            "--n".into(),
            "4".into(),
            "--t0".into(),
            "0.01".into(),
            "--t".into(),
            "0.2".into(),
            "--dt".into(),
            "1e-3".into(),
            "--seed".into(),
            "1".into(),
            "--out".into(),
            p.display().to_string(),
        ]
    };
    let v = args(&csv);
    let a = bin().args(&v).output().unwrap();
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let report: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["n"], 4);
    assert!(report["jumps"]["aligned"].is_boolean());
    let first = std::fs::read(&csv).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert!(text.starts_with("step,t,direct,reconstructed,diff\n10,0.01,0,0,0\n"));
    assert!(!text.contains('\r'));
    let b = bin().args(&v).output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(first, std::fs::read(&csv).unwrap());
}

#[test]
fn failed_run_leaves_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let out = run(&[
        "verify",
        "--model",
        "gamma:a=10,b=20",
        "--n",
        "2",
        "--t0",
        "0.00015",
        "--dt",
        "1e-4",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(error_code(&out), "paths.off_grid");
    assert!(!csv.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn config_errors() {
    let out = run(&["simulate", "--model", "gamma:a=10,b=20", "--mode", "rational"]);
    assert_eq!(error_code(&out), "cli.invalid_config");
    let out = run(&["verify", "--model", "gamma:a=10,b=20"]);
    assert_eq!(error_code(&out), "cli.invalid_config");
    let out = run(&["coeffs", "--n", "2", "--model", "gamma:a=10"]);
    assert_eq!(error_code(&out), "models.syntax");
    let out = run(&["coeffs", "--n", "99", "--model", "gamma:a=10,b=20"]);
    assert_eq!(error_code(&out), "combinatorics.order_too_large");
    let out = run(&[]);
    assert_eq!(error_code(&out), "cli.invalid_config");
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"command": "coeffs", "model": "gamma:a=10,b=20", "n": 3, "mode": "rational"}"#,
    )
    .unwrap();
    let from_file = run(&["--config", cfg.to_str().unwrap()]);
    let from_flags = run(&["coeffs", "--model", "gamma:a=10,b=20", "--n", "3"]);
    assert!(from_file.status.success());
    assert_eq!(from_file.stdout, from_flags.stdout);
    // flags override the file
    let v = ok_json(&["coeffs", "--config", cfg.to_str().unwrap(), "--n", "2"]);
    assert_eq!(v["n"], 2);
    std::fs::write(&cfg, r#"{"command": "coeffs", "bogus": 1}"#).unwrap();
    let out = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(error_code(&out), "cli.invalid_config");
}

#[test]
fn exact_verify_random_fixture_is_exact() {
    for n in ["1", "4", "6"] {
        let v = ok_json(&["exact-verify", "--n", n, "--seed", "7", "--jumps", "5"]);
        assert_eq!(v["terminal_diff_exact"], "0");
        assert_eq!(v["exact_arithmetic"], true);
    }
    let v = ok_json(&["exact-verify", "--n", "3", "--mode", "float"]);
    assert!(v["relative_terminal_diff"].as_f64().unwrap() < 1e-9);
}

#[test]
fn exact_verify_fixture_file() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx.json");
    std::fs::write(
        &fx,
        r#"{"horizon": "1", "drift": "1/3", "jumps": [{"t": "1/4", "x": "1/2"}, {"t": "3/4", "x": "-1/5"}],
            "moments": ["1/2", "1/3", "1/5"]}"#,
    )
    .unwrap();
    let v = ok_json(&["exact-verify", "--n", "3", "--fixture", fx.to_str().unwrap(), "--t0", "0.1", "--t", "0.8"]);
    assert_eq!(v["terminal_diff_exact"], "0");
    assert_eq!(v["fixture"]["jumps"].as_array().unwrap().len(), 2);
}

#[test]
fn simulate_and_convergence_csv() {
    let out = run(&["simulate", "--model", "gamma:a=10,b=20", "--t", "0.01", "--dt", "1e-3", "--seed", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.starts_with("step,t,dX,X\n0,0,0,0\n"));

    let out = run(&[
        "convergence", "--model", "gamma:a=10,b=20", "--n", "3", "--t0", "0.01", "--t", "0.5",
        "--dts", "1e-2,1e-3", "--seed", "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("0.01,50,"));
    assert!(rows[2].starts_with("0.001,500,"));
}

#[test]
fn taylor_study() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("f.json");
    std::fs::write(&spec, r#"{"kind": "exp", "order": 2, "grid": [0.5, 1]}"#).unwrap();
    let v = ok_json(&[
        "taylor", "--model", "gamma:a=10,b=20", "--functional", spec.to_str().unwrap(),
        "--orders", "2,4", "--paths", "4", "--dt", "0.05",
    ]);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["order"], 2);
    assert_eq!(v["strictly_decreasing"], true);
    std::fs::write(&spec, r#"{"kind": "exp", "order": 2, "grid": [1, 0.5]}"#).unwrap();
    let out = run(&["taylor", "--model", "gamma:a=10,b=20", "--functional", spec.to_str().unwrap()]);
    assert_eq!(error_code(&out), "taylor.invalid_functional");
}
