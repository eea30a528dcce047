use std::process::{Command, Output};

use serde_json::Value;

fn qlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlab"))
        .args(args)
        .env_remove("QLAB_SEED")
        .output()
        .expect("qlab runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn suite_json_is_byte_identical_across_runs() {
    let a = qlab(&["suite", "--json"]);
    let b = qlab(&["suite", "--json"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["tool"], "qlab");
    assert_eq!(v["passed"], v["total"]);
}

#[test]
fn build_extremal_summary_for_square() {
    let out = qlab(&["build-extremal", "--phi", "power:1,2", "--n", "2", "--grid", "1024"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["gamma"], 1.0);
    let r = v["R"].as_f64().unwrap();
    assert!((r - 1.5f64.exp()).abs() < 1e-7, "{r}");
    let (e, b) = (v["energy"].as_f64().unwrap(), v["bound"].as_f64().unwrap());
    assert!((b - 3.0 * std::f64::consts::PI).abs() < 1e-9);
    assert!((e - b).abs() <= 1e-6 * b);
}

#[test]
fn build_extremal_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("profile.csv");
    let out = qlab(&["build-extremal", "--phi", "power:1,2", "--n", "3", "--grid", "64", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "r,K,I,rho,phi_of_K");
    assert_eq!(rows.len(), 65);
    let last: Vec<f64> = rows[64].split(',').map(|x| x.parse().unwrap()).collect();
    // r = 1: K = 1, I = 3/2
    assert!((last[0] - 1.0).abs() < 1e-12 && (last[1] - 1.0).abs() < 1e-12);
    assert!((last[2] - 1.5).abs() < 1e-6);
}

#[test]
fn check_phi_flags_exponential_in_the_plane() {
    let out = qlab(&["check-phi", "--phi", "exp_power:1,1", "--n", "2", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let t42 = v["conditions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["kind"]["tag"] == "T42")
        .unwrap();
    assert_eq!(t42["verdict"], "Divergent");
    assert_eq!(v["consistent"], true);
}

#[test]
fn ring_modulus_prints_two_pi() {
    let out = qlab(&["ring-modulus", "--r", "1", "--R", "2.718281828459045", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let m: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((m - 2.0 * std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn verify_reports_both_sides() {
    let out = qlab(&["verify-lemma31", "--K", "power:1,-1", "--phi", "power:1,1", "--n", "2", "--p", "1", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let rec = &json(&out)["record"];
    assert!((rec["lhs"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!((rec["rhs"].as_f64().unwrap() - 1.0 / (4.0 * std::f64::consts::E)).abs() < 1e-8);
    assert_eq!(rec["pass"], true);
}

#[test]
fn norm_profile_csv_and_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("norm.csv");
    let out = qlab(&["norm-profile", "--Q", "const:1", "--n", "2", "--delta", "0.5", "--points", "4", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Divergent"));
    let text = std::fs::read_to_string(&path).unwrap();
    for row in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let (r, v) = row.split_once(',').unwrap();
        let (r, v): (f64, f64) = (r.parse().unwrap(), v.parse().unwrap());
        assert!((v - 2.0 * std::f64::consts::PI * r).abs() <= 1e-12 * v);
    }
}

#[test]
fn malformed_input_exits_with_two() {
    for args in [
        vec!["check-phi", "--phi", "power:1", "--n", "2"],
        vec!["check-phi", "--phi", "{\"family\": \"power\", \"params\": {\"c\": -1, \"alpha\": 2}}", "--n", "2"],
        vec!["ring-modulus", "--r", "2", "--R", "1", "--n", "2"],
        vec!["build-extremal", "--phi", "power:1,0.5", "--n", "2"],
        vec!["verify-lemma31", "--K", "power:1,-1", "--phi", "power:1,1"],
        vec!["no-such-command"],
    ] {
        let out = qlab(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn malformed_spec_names_the_field() {
    let out = qlab(&["check-phi", "--phi", "{\"family\": \"power\", \"params\": {\"c\": -1, \"alpha\": 2}}", "--n", "2"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.c"));
}

#[test]
fn seed_comes_from_environment() {
    let a = Command::new(env!("CARGO_BIN_EXE_qlab"))
        .args(["verify-lemma31", "--sweep", "--trials", "5", "--json"])
        .env("QLAB_SEED", "11")
        .output()
        .unwrap();
    let v = json(&a);
    assert_eq!(v["seed"], 11);
    assert_eq!(v["config"]["seed"], 11);
}
