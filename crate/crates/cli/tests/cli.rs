use std::process::{Command, Output};

use kzb_core::connection::{Connection, ConnectionRecord};

fn kzb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kzb")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn qn_table() {
    let o = kzb(&["tables", "--what", "qn", "--max", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "q2 = -1/2*x\nq3 = -1/6*y\nq4 = -1/8*x^2 + 1/40*u\n");
}

#[test]
fn residue_of_regularized_form() {
    let o = kzb(&["residue", "--model", "nu-reg", "--fiber", "4", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "ad_{[T,S]}");
    let o = kzb(&["residue", "--model", "omega-reg", "--degree", "4", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pole_order"], 1);
    assert_eq!(v["residue"], "ad_{[T,S]}");
}

#[test]
fn symbolic_suite_passes() {
    let o = kzb(&["verify", "--suite", "symbolic", "--degree", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn numeric_suite_reports_failure_with_exit_one() {
    assert_eq!(kzb(&["verify", "--suite", "numeric"]).status.code(), Some(0));
    let o = kzb(&["verify", "--suite", "numeric", "--tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL curve relation"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["residue", "--model", "nu-alg"][..],
        &["emit-connection", "--model", "nu-alg", "--fiber", "0", "0"],
        &["emit-connection", "--model", "omega-alg", "--degree", "0"],
        &["emit-connection", "--model", "nu-alg", "--fiber", "4", "x"],
        &["solve-gauge", "--degree", "3"],
        &["tables", "--what", "qn", "--max", "1"],
        &["verify", "--suite", "numeric", "--tol", "-1"],
        &["frobnicate"],
    ] {
        let o = kzb(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn inner_solve_reports_conflict() {
    let o = kzb(&["solve-gauge", "--mode", "inner", "--degree", "3", "--fiber", "5", "2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["outcome"], "obstructed");
    let texts: Vec<&str> = v["conflict"].as_array().unwrap().iter().map(|c| c["text"].as_str().unwrap()).collect();
    assert!(texts.iter().any(|t| t.starts_with("μ = -1/2")));
    assert!(texts.iter().any(|t| t.starts_with("μ = 0")));
}

#[test]
fn full_solve_succeeds() {
    let o = kzb(&["solve-gauge", "--mode", "full", "--degree", "5", "--fiber", "-3", "1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["outcome"], "success");
    assert_eq!(v["residual_zero"], true);
}

#[test]
fn json_round_trips_and_is_deterministic() {
    let cases: [&[&str]; 6] = [
        &["gauss-manin"],
        &["omega-alg"],
        &["omega-reg"],
        &["nu-naive", "--fiber", "4", "1"],
        &["nu-alg", "--fiber", "1/2", "-3"],
        &["nu-reg", "--fiber", "0", "1"],
    ];
    for case in cases {
        for d in ["1", "3", "6"] {
            let mut args = vec!["emit-connection", "--format", "json", "--degree", d, "--model"];
            args.extend_from_slice(case);
            let o = kzb(&args);
            assert_eq!(o.status.code(), Some(0), "{args:?}");
            let rec: ConnectionRecord = serde_json::from_slice(&o.stdout).unwrap();
            let c = Connection::from_json(&rec).unwrap();
            assert_eq!(c.to_json(&rec.model), rec);
            assert_eq!(kzb(&args).stdout, o.stdout);
        }
    }
}

#[test]
fn universal_form_specializes() {
    let a = kzb(&["emit-connection", "--model", "omega-reg", "--fiber", "4", "1", "--degree", "4"]);
    let b = kzb(&["emit-connection", "--model", "nu-reg", "--fiber", "4", "1", "--degree", "4"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn curvature_of_universal_forms_vanishes() {
    let o = kzb(&["curvature", "--model", "omega-alg", "--degree", "4", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["flat"], true);
}
