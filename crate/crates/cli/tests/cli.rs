use std::process::{Command, Output};

use serde_json::Value;

fn permcycle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_permcycle"))
        .args(args)
        .env_remove("PERMCYCLE_PRECISION_BITS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = permcycle(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn derangement_limit() {
    let out = permcycle(&["prob", "no-cycles", "--lengths", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("# config:"));
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("0.36787944117144232159"));
}

#[test]
fn json_shape_and_precision_flag() {
    let v = json(&[
        "--format", "json", "--bits", "128", "prob", "joint", "--c1", "1", "--c2", "0",
    ]);
    assert_eq!(v["config"]["precision_bits"], 128);
    assert_eq!(v["result"]["precision_bits"], 128);
    assert!(v["result"]["value"]
        .as_str()
        .unwrap()
        .starts_with("0.15335496684"));
}

#[test]
fn precision_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_permcycle"))
        .args(["--format", "json", "prob", "no-powers", "--exponent", "3"])
        .env("PERMCYCLE_PRECISION_BITS", "96")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["precision_bits"], 96);
    assert!(v["result"]["value"]
        .as_str()
        .unwrap()
        .starts_with("0.3005753"));
}

#[test]
fn tau_of_highly_composite() {
    let v = json(&["tau", "1081080"]);
    assert_eq!(v["result"]["tau"], 256);
}

#[test]
fn egf_coefficient_counts_involutions() {
    let v = json(&["egf", "coeff", "--n", "6", "--lengths", "1,2"]);
    assert_eq!(v["result"]["count"], "76");
    let v = json(&["egf", "coeff", "--n", "6", "--except", "1"]);
    assert_eq!(v["result"]["count"], "265");
}

#[test]
fn keeloq_round_trip() {
    let enc = permcycle(&[
        "--format",
        "json",
        "keeloq",
        "encrypt",
        "--key",
        "5cec6701b79fd949",
        "--block",
        "f741e2db",
    ]);
    let v: Value = serde_json::from_slice(&enc.stdout).unwrap();
    let c = v["result"]["block"].as_str().unwrap().to_string();
    let dec = permcycle(&[
        "--format",
        "json",
        "keeloq",
        "decrypt",
        "--key",
        "5cec6701b79fd949",
        "--block",
        &c,
    ]);
    let v: Value = serde_json::from_slice(&dec.stdout).unwrap();
    assert_eq!(v["result"]["block"], "f741e2db");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(
        permcycle(&["--no-such-flag", "tau", "6"]).status.code(),
        Some(2)
    );
    assert_eq!(
        permcycle(&["keeloq", "encrypt", "--key", "zz", "--block", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(permcycle(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_one() {
    let out = permcycle(&["attack", "bard", "--width", "13"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn identical_config_gives_identical_json() {
    let args = [
        "--seed",
        "11",
        "attack",
        "cbw",
        "--width",
        "10",
        "--key-trials",
        "3",
    ];
    let a = permcycle(&args);
    let b = permcycle(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(!stdout(&a).contains("wall_time_ms"));
    let sim = [
        "--seed",
        "4",
        "--workers",
        "2",
        "--format",
        "json",
        "simulate",
        "--n",
        "300",
        "--trials",
        "50",
        "--k",
        "1,6",
    ];
    assert_eq!(permcycle(&sim).stdout, permcycle(&sim).stdout);
}

#[test]
fn codebook_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("book.bin");
    let p = path.to_str().unwrap();
    let first = json(&[
        "--seed",
        "2",
        "attack",
        "cbw",
        "--width",
        "10",
        "--eta",
        "1",
        "--write-codebook",
        p,
    ]);
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"PCLB");
    assert_eq!(bytes.len(), 16 + 1024 * 2 * 2);
    let again = json(&["attack", "cbw", "--width", "10", "--codebook", p]);
    assert_eq!(
        first["result"]["reports"][0]["recovered_key"],
        again["result"]["reports"][0]["recovered_key"]
    );
    assert_eq!(
        first["result"]["reports"][0]["succeeded"],
        again["result"]["reports"][0]["succeeded"]
    );
    let wrong = permcycle(&["attack", "cbw", "--width", "12", "--codebook", p]);
    assert_eq!(wrong.status.code(), Some(1));
}

#[test]
fn fixdist_csv() {
    let out = permcycle(&["fixdist", "--k", "1", "--cmax", "3"]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config:"));
    assert_eq!(lines.next().unwrap(), "c,probability");
    assert!(lines.next().unwrap().starts_with("0,0.3678794411"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn costs_optimum() {
    let v = json(&["costs", "--optimize"]);
    assert_eq!(v["result"]["optimal_runs"], 23);
    assert!(v["result"]["figure_of_merit"]
        .as_str()
        .unwrap()
        .contains("brute-force"));
    let total = v["result"]["cost"]["total_log2"].as_f64().unwrap();
    assert!((total - 398.41207).abs() < 1e-4);
}

#[test]
fn bard_table_rows() {
    let text = stdout(&permcycle(&["bard-table"]));
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows[9].starts_with("100,0.2642411176"));
}

#[test]
fn check_subset_passes() {
    let out = permcycle(&["check", "--only", "1,2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 2);
}
