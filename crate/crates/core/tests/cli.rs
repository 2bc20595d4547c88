use std::process::{Command, Output};

use serde_json::Value;

fn thrifty(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thrifty")).args(args).output().expect("spawn thrifty")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn analytic_fidelity_envelope() {
    let r = json(&thrifty(&["analytic", "--ensemble", "clifford", "--n", "1", "--m2", "0", "--r", "1,10"]));
    assert_eq!(r["command"], "analytic");
    assert!(r["version"].is_string() && r["diagnostics"].is_object());
    assert!((f(&r["results"]["vstar"]) - 0.5).abs() < 1e-12);
    assert_eq!(r["config"]["scenario"]["m2_source"], "direct");

    let r = json(&thrifty(&["analytic", "--ensemble", "fourdesign", "--n", "2"]));
    assert!((f(&r["results"]["vstar"]) - 2.0 / 7.0).abs() < 1e-12);
}

#[test]
fn config_document_replaces_flags() {
    let dir = std::env::temp_dir().join(format!("thrifty-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("req.json");
    std::fs::write(&p, r#"{"ensemble":{"kind":"simple_t","k":1},"n":1,"scenario":{"type":"fidelity","m2":0.0}}"#).unwrap();
    let r = json(&thrifty(&["--config", p.to_str().unwrap(), "analytic"]));
    assert!((f(&r["results"]["vstar"]) - 0.125).abs() < 1e-12);

    std::fs::write(&p, r#"{"ensemble":{"kind":"clifford"},"n":1,"scenario":{"type":"fidelity","m2":0.0},"bogus":1}"#).unwrap();
    assert_eq!(thrifty(&["--config", p.to_str().unwrap(), "analytic"]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn csv_layout_has_comment_header() {
    let out = thrifty(&["--format", "csv", "figure", "ensemble-compare", "--ns", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# thrifty ") && lines[1].starts_with("# config {"));
    assert_eq!(lines[2], "n,k,ensemble,vstar");
    assert_eq!(lines.len(), 3 + 5 * 3);
}

#[test]
fn errors_exit_with_code_two() {
    let out = thrifty(&["analytic", "--ensemble", "interleaved", "--k", "3", "--l", "1", "--n", "2", "--m2", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds"));
    // randomized figures need an explicit seed
    assert_eq!(thrifty(&["figure", "upper-bound-scatter"]).status.code(), Some(2));
}

#[test]
fn verify_suite_passes() {
    let r = json(&thrifty(&["verify", "charfuncs"]));
    assert_eq!(r["results"]["passed"], true);
}

#[test]
fn out_dir_and_binary_export() {
    let dir = std::env::temp_dir().join(format!("thrifty-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bin = dir.join("omega.bin");
    let out = Command::new(env!("CARGO_BIN_EXE_thrifty"))
        .env("THRIFTY_OUT_DIR", &dir)
        .args(["--out", "cm.json", "crossmoment", "--n", "1", "--ensemble", "clifford", "--mode", "enumerate"])
        .args(["--export", bin.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("cm.json")).unwrap()).unwrap();
    assert_eq!(r["command"], "crossmoment");
    let b = std::fs::read(&bin).unwrap();
    assert_eq!(&b[..4], b"TSOP");
    assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
    assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 1);
    assert_eq!(u64::from_le_bytes(b[12..20].try_into().unwrap()), 16);
    assert_eq!(b.len(), 28 + 16 * 16 * 16);
    std::fs::remove_dir_all(&dir).ok();
}
