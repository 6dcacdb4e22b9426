use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn weylpinch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weylpinch"))
        .args(args)
        .env("WEYLPINCH_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fubini_study_grid_is_degenerate_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fs.json");
    let o = weylpinch(&[
        "analyze", "--model", "fubini_study_cp2", "--suites", "spectra,pinch", "--grid", "3x3x3x3", "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out);
    let points = r["points"].as_array().unwrap();
    assert_eq!(points.len(), 81);
    assert!(points.iter().all(|p| p["spectra"]["degenerate_plus"] == true));
    // lexicographic grid order, last axis fastest
    assert_eq!(points[1]["index"], serde_json::json!([0, 0, 0, 1]));
    assert_eq!(points[80]["index"], serde_json::json!([2, 2, 2, 2]));
    assert_eq!(r["schema"], 1);
    assert_eq!(r["summary"]["pass"], true);
}

#[test]
fn flat_torus_invariants_vanish() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t4.json");
    let o = weylpinch(&["analyze", "--model", "flat_t4", "--suites", "invariants", "--order", "4", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let inv = &json(&out)["global"]["invariants"][0];
    assert_eq!(inv["tau_rounded"], 0);
    assert_eq!(inv["chi_rounded"], 0);
}

#[test]
fn user_metric_single_point() {
    let dir = tempfile::tempdir().unwrap();
    let metric = dir.path().join("my.metric");
    std::fs::write(
        &metric,
        "name: warped\ncoords: x y z w\ng[1][1] = 1 + 0.2*sin(y)^2\ng[2][2] = exp(0.3*x)\ng[3][3] = 1\ng[4][4] = 2 + sin(x*z)\n",
    )
    .unwrap();
    let out = dir.path().join("u.json");
    let o = weylpinch(&[
        "analyze", "--metric", metric.to_str().unwrap(), "--point", "0.3,0.1,0.2,0.4", "--suites", "spectra,invariants",
        "-o", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out);
    assert_eq!(r["points"].as_array().unwrap().len(), 1);
    assert!(r["points"][0]["spectra"]["lambda_plus"].is_array());
    assert_eq!(r["config"]["metric"]["kind"], "file");
    assert_eq!(r["global"]["skipped"][0]["suite"], "invariants");
}

#[test]
fn csv_has_one_row_per_point() {
    let o = weylpinch(&["analyze", "--model", "round_s4", "--grid", "2x1x1x3", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rows.records().count(), 6);
}

#[test]
fn invalid_configs_exit_with_two() {
    for args in [
        vec!["verify", "lemma9"],
        vec!["integrate", "--model", "complex_hyperbolic_ch2"],
        vec!["analyze", "--model", "round_s4", "--point", "9,9,9,9"],
        vec!["analyze", "--model", "round_s5"],
        vec!["analyze", "--model", "round_s4", "--orientation", "2"],
        vec!["analyze", "--model", "round_s4", "--suites", "spectra,everything"],
        vec!["analyze", "--model", "round_s4", "--budget", "10", "--suites", "kahler"],
        vec!["analyze", "--metric", "/nonexistent/metric"],
        vec!["analyze", "--model", "round_s4", "--format", "xml"],
        vec!["analyze"],
        vec!["bogus"],
    ] {
        let o = weylpinch(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn verify_prints_check_lines() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("psi.json");
    let o = weylpinch(&["verify", "psi", "--budget", "5000", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let line = text.lines().find(|l| l.contains("AB − C² = 0 at k = 2/3")).expect("AB − C² line");
    assert!(line.contains("max |residual|") && line.contains("< 1e-10") && line.ends_with("PASS"), "{line}");
    assert_eq!(json(&out)["summary"]["pass"], true);
}

#[test]
fn orientation_flip_reverses_the_signature() {
    let o = weylpinch(&["integrate", "--model", "fubini_study_cp2", "--order", "8", "--orientation", "-1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["global"]["invariants"][0]["tau_rounded"], -1);
    assert_eq!(r["global"]["invariants"][0]["chi_rounded"], 3);
}

#[test]
fn output_path_does_not_change_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("nested_name.json");
    for p in [&a, &b] {
        let o = weylpinch(&["analyze", "--model", "product_s2xs2(1,2)", "--grid", "1x2x1x2", "-o", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn models_lists_the_catalog() {
    let o = weylpinch(&["models"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["flat_t4", "round_s4", "fubini_study_cp2", "product_s2xs2", "complex_hyperbolic_ch2"] {
        assert!(text.contains(name));
    }
}
