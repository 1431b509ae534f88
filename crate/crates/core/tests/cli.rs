use std::process::{Command, Output};

use koenigs_lab::series::SeriesFile;
use koenigs_lab::TaylorSeries;
use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_koenigs-lab"))
        .args(args)
        .env_remove("KOENIGS_LAB_N")
        .output()
        .expect("run koenigs-lab")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

#[test]
fn csym_reports_the_counterexample() {
    let out = lab(&["csym", "--symbol", "bpair:0.5,0,0.3,0", "--N", "256"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], "not_complex_symmetric");
    assert!((v["lhs"].as_f64().unwrap() - 0.5).abs() < 1e-7);
    assert!((v["rhs"].as_f64().unwrap() - 0.4472136).abs() < 1e-7);
}

#[test]
fn csym_affine_is_consistent() {
    let out = lab(&["csym", "--symbol", "affine:0.5,0,0.25,0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], "consistent");
    assert!(v["csym_defect"].as_f64().unwrap() < 1e-10);
}

#[test]
fn biorth_prints_a_full_certificate() {
    let out = lab(&["biorth", "--a", "1/2", "--max", "12"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 169);
    assert!(text.lines().all(|l| l.ends_with(" PASS")));

    let out = lab(&["biorth", "--a", "1/3", "--max", "2", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("a,n,m,value,status"));
    assert!(text.contains("1/3,1,2,0/1,PASS"));
}

#[test]
fn usage_errors_exit_2() {
    let out = lab(&["biorth", "--a", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = lab(&["csym", "--symbol", "ellipse:1,2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bpair:a_re,a_im,l_re,l_im"));
    assert_eq!(lab(&["kernel", "--block", "0"]).status.code(), Some(2));
    assert_eq!(lab(&["frobnicate"]).status.code(), Some(2));
    // Not a Schröder map.
    assert_eq!(lab(&["koenigs", "--symbol", "rot:1.5708"]).status.code(), Some(2));
}

#[test]
fn failed_checks_exit_1() {
    let out = lab(&["gram", "--symbol", "bpair:0.5,0,0.3,0", "--m", "6"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["pass"], false);
    assert_eq!(lab(&["commutant", "--symbol", "bpair:0.5,0,0.3,0"]).status.code(), Some(1));
}

#[test]
fn reports_are_deterministic() {
    for args in [
        &["commutant", "--symbol", "affine:0.5,0,0.25,0", "--seed", "11"][..],
        &["koenigs", "--symbol", "bpair:0.3,0.2,0,0.5", "--N", "128"][..],
        &["gram", "--symbol", "affine:0.5,0,0.25,0", "--N", "128", "--m", "8"][..],
    ] {
        let a = lab(args);
        let b = lab(args);
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let a = lab(&["commutant", "--symbol", "affine:0.5,0,0.25,0", "--seed", "11"]);
    let b = lab(&["commutant", "--symbol", "affine:0.5,0,0.25,0", "--seed", "12"]);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn floats_have_seventeen_digits() {
    let out = lab(&["kernel", "--a", "1/2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"k1_at_a\": 8.8888888888888884e-1"), "{text}");
}

#[test]
fn custom_symbol_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phi.json");
    let phi = TaylorSeries::from_real(&[0.25, 0.5], 64).unwrap();
    SeriesFile::save(&phi, &path).unwrap();
    let symbol = format!("file:{}", path.display());
    let out = lab(&["koenigs", "--symbol", &symbol, "--N", "64", "--block", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!((v["fixed_point"][0].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["sigma"][0][0].as_f64().unwrap() + 0.5).abs() < 1e-12);

    std::fs::write(&path, r#"{"truncation_order": 3, "coeffs": [[0.1, 0]]}"#).unwrap();
    assert_eq!(lab(&["koenigs", "--symbol", &symbol]).status.code(), Some(2));
}

#[test]
fn out_flag_and_environment_order() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.json");
    let out = Command::new(env!("CARGO_BIN_EXE_koenigs-lab"))
        .args(["kernel", "--out", path.to_str().unwrap()])
        .env("KOENIGS_LAB_N", "40")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["N"], 40);
}

#[test]
fn csv_matrix_export() {
    let out = lab(&["gram", "--symbol", "affine:0.5,0,0.25,0", "--m", "2", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().all(|l| l.split(',').count() == 3));
}

#[test]
fn reproduce_all_text_summary() {
    let out = lab(&["reproduce-all", "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 16);
    assert!(text.contains("PASS coverage 37/37 operations"));
}

#[test]
fn unstable_recurrence_is_reported_and_fails_the_route_check() {
    let out = lab(&["koenigs", "--symbol", "bpair:0.6,0,-0.7,0", "--N", "128"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["pass"], false);
    assert!(v["route_diff"].is_null());
    assert!(v["recurrence"]["skipped"].as_str().unwrap().contains("unstable"));
    assert!(v["iterate"]["residual"].as_f64().unwrap() < 1e-9);
}
