use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lgpoly(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgpoly")).args(args).output().expect("binary runs")
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn list_prints_the_catalog() {
    let out = lgpoly(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), lgpoly::catalog::catalog().len());
}

#[test]
fn verify_burke_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = lgpoly(&["verify-burke", "--lambda", "1", "--rho", "2.5", "--size", "400", "--seed", "7", "--out", dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    }
    let (da, db) = (fs::read(a.join("data.csv")).unwrap(), fs::read(b.join("data.csv")).unwrap());
    assert_eq!(da, db);
    assert!(!da.contains(&b'\r'));
    let s = summary(&a);
    assert_eq!(s["seed"], 7);
    assert_eq!(s["config"]["size"], 400);
    assert_eq!(s["status"], "pass");
    assert_eq!(s["checks"].as_array().unwrap().len(), 6);
    for series in ["north_eta", "east_zeta", "staircase_xicheck"] {
        assert!(s["stats"][series]["ks"]["statistic"].is_number());
    }
}

#[test]
fn duality_table_matches_its_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lgpoly(&["duality", "--rho", "2", "--grid", "9", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let mut r = csv::Reader::from_path(tmp.path().join("data.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 9);
    for row in rows {
        let diff: f64 = row[4].parse().unwrap();
        assert!(diff < 1e-8);
    }
}

#[test]
fn config_file_and_flags_layer() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{ "grid": 3, "rho": [1.5, 4], "seed": 11 }"#).unwrap();
    let out_dir = tmp.path().join("out");
    let out = lgpoly(&["duality", "--config", cfg.to_str().unwrap(), "--grid", "4", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out_dir);
    assert_eq!(s["seed"], 11);
    assert_eq!(s["config"]["grid"], 4);
    assert_eq!(s["config"]["rho"], serde_json::json!([1.5, 4.0]));
}

#[test]
fn bad_config_exits_with_the_offending_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{ "environments": "many" }"#).unwrap();
    let out = lgpoly(&["oracle", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("`environments`"), "{err}");
    assert!(!tmp.path().join("summary.json").exists());
}

#[test]
fn resource_overrun_aborts_with_partial_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lgpoly(&["exponent", "--memory-budget", "1000", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let s = summary(tmp.path());
    assert_eq!(s["status"], "aborted");
    assert_eq!(s["partial"], true);
    assert!(s["error"].as_str().unwrap().contains("largest N"));
}

#[test]
fn failing_gate_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lgpoly(&["oracle", "--size", "3", "--environments", "2", "--tolerance", "0", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(summary(tmp.path())["status"], "fail");
}
