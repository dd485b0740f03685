use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ohmic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ohmic")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn p4(dir: &TempDir) -> String {
    write(dir.path(), "p4.txt", "0 1 1\n1 2 1\n2 3 1\n").display().to_string()
}

fn num(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

#[test]
fn solve_reports_capacity_with_config_echo() {
    let dir = TempDir::new().unwrap();
    let net = p4(&dir);
    let v = json(&ohmic(&["solve", &net, "--set", "A=0", "--set", "B=3"]));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["config"]["command"]["solve"]["sets"][1], "B=3");
    assert!((num(&v["report"]["capacity"]) - 1.0 / 3.0).abs() < 1e-15);
    assert!((num(&v["report"]["resistance"]) - 3.0).abs() < 1e-14);
    assert!((num(&v["report"]["potential"]["1"]) - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(num(&v["report"]["harmonic_measure"]["0"]), 1.0);
}

#[test]
fn floats_carry_seventeen_digits() {
    let dir = TempDir::new().unwrap();
    let net = p4(&dir);
    let out = ohmic(&["solve", &net, "--set", "A=0", "--set", "B=3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.contains("\"capacity\"")).unwrap();
    let digits: String = line.split(':').nth(1).unwrap().trim().trim_end_matches(',').chars().take_while(|c| *c != 'e').filter(|c| c.is_ascii_digit()).collect();
    assert_eq!(digits.len(), 17);
}

#[test]
fn domain_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let net = p4(&dir);
    let out = ohmic(&["solve", &net, "--set", "A=0", "--set", "B=7"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown node label"));
    let out = ohmic(&["solve", &net, "--set", "A=0,1", "--set", "B=1,3"]);
    assert_eq!(out.status.code(), Some(2));
    let bad = write(dir.path(), "bad.txt", "0 1 x\n").display().to_string();
    assert_eq!(ohmic(&["solve", &bad, "--set", "A=0", "--set", "B=1"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let net = p4(&dir);
    assert_eq!(ohmic(&["solve", &net, "--set", "A=0", "--set", "B=3", "--bogus"]).status.code(), Some(1));
    assert_eq!(ohmic(&["solve", &net, "--set", "A=0"]).status.code(), Some(1));
    assert_eq!(ohmic(&["frobnicate"]).status.code(), Some(1));
    let out = ohmic(&["mc", "hitting", &net, "--set", "A=0", "--set", "B=3", "--start", "1", "--samples", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bounds_from_certificates() {
    let dir = TempDir::new().unwrap();
    let net = p4(&dir);
    let v = json(&ohmic(&["bounds", &net, "--set", "A=0", "--set", "B=3"]));
    assert!(v["report"].get("upper").is_none() && v["report"].get("lower").is_none());
    let f = write(dir.path(), "f.txt", "0 1\n1 0.6666666666666666\n2 0.3333333333333333\n3 0\n").display().to_string();
    let v = json(&ohmic(&["bounds", &net, "--set", "A=0", "--set", "B=3", "--potential", &f]));
    assert!((num(&v["report"]["upper"]) - num(&v["report"]["capacity"])).abs() < 1e-15);

    let t3 = write(dir.path(), "t3.txt", "a b 1\nb c 1\nc a 1\n").display().to_string();
    let phi = write(dir.path(), "phi.txt", "a b 1\n").display().to_string();
    let v = json(&ohmic(&["bounds", &t3, "--set", "A=a", "--set", "B=b", "--flow", &phi]));
    assert!((num(&v["report"]["lower"]) - 1.0).abs() < 1e-15);
    assert!((num(&v["report"]["capacity"]) - 1.5).abs() < 1e-14);

    let bad = write(dir.path(), "bad.txt", "0 0.5\n1 0.5\n2 0.5\n3 0\n").display().to_string();
    assert_eq!(ohmic(&["bounds", &net, "--set", "A=0", "--set", "B=3", "--potential", &bad]).status.code(), Some(2));
    let leaky = write(dir.path(), "leak.txt", "a c 1\n").display().to_string();
    assert_eq!(ohmic(&["bounds", &t3, "--set", "A=a", "--set", "B=b", "--flow", &leaky]).status.code(), Some(2));
}

#[test]
fn spectral_on_lazy_pair() {
    let dir = TempDir::new().unwrap();
    let net = write(dir.path(), "k2.txt", "a b 5\na a 5\nb b 5\n").display().to_string();
    let v = json(&ohmic(&["spectral", &net, "--mixing"]));
    let r = &v["report"];
    assert!((num(&r["gap"]) - 1.0).abs() < 1e-14);
    assert!((num(&r["cheeger"]["lower"]) - 0.125).abs() < 1e-15);
    assert!((num(&r["cheeger"]["upper"]) - 1.0).abs() < 1e-15);
    assert_eq!(r["flow_poincare"]["bounds"].as_array().unwrap().len(), 4);
    assert!((num(&r["mixing"]["tau1"]) - (1.0 - 2f64.ln())).abs() < 1e-9);

    let p4 = p4(&dir);
    let v = json(&ohmic(&["spectral", &p4, "--paths", "geodesic", "--scheme", "w2,w3"]));
    let bounds = v["report"]["flow_poincare"]["bounds"].as_array().unwrap();
    assert_eq!(bounds.len(), 2);
    assert_eq!(bounds[0]["scheme"], "w2");
}

#[test]
fn oversize_cheeger_is_a_resource_error() {
    let dir = TempDir::new().unwrap();
    let text: String = (0..24).map(|i| format!("{i} {} 1\n", i + 1)).collect();
    let net = write(dir.path(), "path.txt", &text).display().to_string();
    assert_eq!(ohmic(&["spectral", &net, "--cheeger"]).status.code(), Some(3));
    assert!(ohmic(&["spectral", &net]).status.success());
}

#[test]
fn lattice_csv() {
    let out = ohmic(&["lattice", "-d", "2", "--n-max", "6"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "d,n,capacity,upper_bound,lower_bound,closed_form,wall_time_ms");
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 6);
    let caps: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(caps.windows(2).all(|w| w[1] < w[0]));
    for r in &rows {
        let (c, bound): (f64, f64) = (r[2].parse().unwrap(), r[5].parse().unwrap());
        assert!(c <= bound);
    }
    let out = ohmic(&["lattice", "-d", "3", "--ns", "2,3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for l in text.lines().skip(1) {
        let cols: Vec<&str> = l.split(',').collect();
        let lower: f64 = cols[4].parse().unwrap();
        assert!(lower > 0.0 && lower <= cols[2].parse::<f64>().unwrap());
    }
    assert_eq!(ohmic(&["lattice", "-d", "4", "--n-max", "2"]).status.code(), Some(2));
}

#[test]
fn glauber_report() {
    let v = json(&ohmic(&["glauber", "-L", "4", "-J", "1", "--h", "1.4", "--beta", "2,4"]));
    let r = &v["report"];
    assert_eq!(r["l_c"], 2);
    assert!((num(&r["gamma"]) - 3.8).abs() < 1e-12);
    assert_eq!(r["predicted_gate_count"], 128);
    assert_eq!(r["table"].as_array().unwrap().len(), 2);
    assert!((num(&r["prefactor"]) - 1.0 / 64.0).abs() < 1e-15);
    assert_eq!(ohmic(&["glauber", "-L", "4", "--h", "2"]).status.code(), Some(2));
    assert_eq!(ohmic(&["glauber", "-L", "5"]).status.code(), Some(3));
}

#[test]
fn mc_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let net = p4(&dir);
    let args = ["mc", "hitting", &net, "--set", "A=0", "--set", "B=3", "--start", "harmonic", "--samples", "3000", "--seed", "4"];
    let first = ohmic(&args);
    let second = ohmic(&args);
    assert_eq!(first.stdout, second.stdout);
    let v = json(&first);
    let t = &v["report"]["time_to_b"];
    assert!((num(&t["mean"]) - 9.0).abs() < 4.0 * num(&t["stderr"]));
    let flux = json(&ohmic(&["mc", "flux", &net, "--set", "A=0", "--set", "B=3", "--edge", "2,1", "--samples", "500"]));
    assert_eq!(num(&flux["report"]["mean"]), -1.0);
    let single = Command::new(env!("CARGO_BIN_EXE_ohmic")).args(args).env("OHMIC_THREADS", "1").output().unwrap();
    assert_eq!(single.stdout, first.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_ohmic")).args(args).env("OHMIC_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn output_file() {
    let dir = TempDir::new().unwrap();
    let net = p4(&dir);
    let out = dir.path().join("report.json");
    let status = ohmic(&["solve", &net, "--set", "A=0", "--set", "B=3", "-o", out.to_str().unwrap()]);
    assert!(status.status.success() && status.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(v["report"]["capacity"].is_number());
}
