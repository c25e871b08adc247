use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL_COEFFS: &str = r#"{
  "coeffs": { "random_sets": 3, "lemma34": { "matrices": 2, "max_dim": 4 } }
}"#;

fn polycalc(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_polycalc"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out/summary.json")).unwrap()).unwrap()
}

#[test]
fn passing_run_exits_zero_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = polycalc(dir.path(), SMALL_COEFFS, &["coeffs"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = summary(dir.path());
    assert_eq!(report["subcommand"], "coeffs");
    assert_eq!(report["passed"], true);
    assert!(dir.path().join("out/coeffs.csv").exists());
    assert!(dir.path().join("out/lemma34.csv").exists());
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS recursion_vs_partial_fractions"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = polycalc(dir.path(), SMALL_COEFFS, &["coeffs", "--seed", "77"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(summary(dir.path())["seed"], 77);

    let first = fs::read(dir.path().join("out/lemma34.csv")).unwrap();
    let out = polycalc(dir.path(), SMALL_COEFFS, &["coeffs", "--seed", "78"]);
    assert_eq!(out.status.code(), Some(0));
    assert_ne!(first, fs::read(dir.path().join("out/lemma34.csv")).unwrap());
}

#[test]
fn threshold_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{ "coeffs": { "random_sets": 3, "tol": 1e-300, "lemma34": { "matrices": 1 } } }"#;
    let out = polycalc(dir.path(), cfg, &["coeffs"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL recursion_vs_partial_fractions"));
    assert_eq!(summary(dir.path())["passed"], false);
}

#[test]
fn non_unimodular_point_exits_two_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{ "e": { "points": [[1.0, 0.0], [0.5, 0.5]] } }"#;
    let out = polycalc(dir.path(), cfg, &["coeffs"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("e.points[1]"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_field_and_bad_type_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = polycalc(dir.path(), r#"{ "vn": { "degree": 3 } }"#, &["vn"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("vn"));

    let out = polycalc(dir.path(), "{\n  \"dilate\": { \"n_max\": \"many\" }\n}", &["dilate"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dilate.n_max") && err.contains("line 2"), "{err}");
}

#[test]
fn dimension_above_cap_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = polycalc(dir.path(), r#"{ "squarefn": { "max_dim": 40 } }"#, &["squarefn"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("squarefn.max_dim"));
}

#[test]
fn bad_thread_count_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, SMALL_COEFFS).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_polycalc"))
        .args(["coeffs", "--out"])
        .arg(dir.path().join("out"))
        .env("POLYCALC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("POLYCALC_THREADS"));
}
