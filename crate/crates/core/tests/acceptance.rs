//! Acceptance battery: one test per criterion, each printing a PASS/FAIL line.

use std::io::Write;

use permcycle::acceptance::{run_criterion, AcceptanceConfig};

fn criterion(id: u32) {
    let result = run_criterion(id, &AcceptanceConfig::default());
    // written to the raw stream so the verdict shows even when output is captured
    let _ = writeln!(std::io::stderr().lock(), "{result}");
    assert!(result.passed, "{result}");
}

#[test]
fn c01_convergence_precision() {
    criterion(1);
}

#[test]
fn c02_oracle_equivalence() {
    criterion(2);
}

#[test]
fn c03_limit_constants() {
    criterion(3);
}

#[test]
fn c04_divisor_counts() {
    criterion(4);
}

#[test]
fn c05_expected_fixed_points() {
    criterion(5);
}

#[test]
fn c06_fixed_point_distribution() {
    criterion(6);
}

#[test]
fn c07_monte_carlo_table() {
    criterion(7);
}

#[test]
fn c08_success_table() {
    criterion(8);
}

#[test]
fn c09_workload_expectations() {
    criterion(9);
}

#[test]
fn c10_keeloq_structure() {
    criterion(10);
}

#[test]
fn c11_mini_attacks() {
    criterion(11);
}

#[test]
fn c12_key_recovery_cost() {
    criterion(12);
}

#[test]
fn c13_distinguisher_accuracy() {
    criterion(13);
}
