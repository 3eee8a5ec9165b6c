//! One test per acceptance criterion; each prints a PASS/FAIL line.

use holonomic_core::acceptance::{self, CriterionOutcome};

fn check(outcome: CriterionOutcome) {
    println!("{outcome}");
    assert!(outcome.passed, "{outcome}");
}

#[test]
fn criterion_01_gate_reproduction() {
    check(acceptance::gate_reproduction());
}

#[test]
fn criterion_02_cphase() {
    check(acceptance::cphase());
}

#[test]
fn criterion_03_cross_method_loops() {
    check(acceptance::cross_method_loops());
}

#[test]
fn criterion_04_connection_oracle() {
    check(acceptance::connection_oracle());
}

#[test]
fn criterion_05_full_dynamics_oracle() {
    check(acceptance::full_dynamics_oracle());
}

#[test]
fn criterion_06_coupling_form_equivalence() {
    check(acceptance::coupling_form_equivalence());
}

#[test]
fn criterion_07_reparametrization_invariance() {
    check(acceptance::reparametrization_invariance());
}

#[test]
fn criterion_08_morris_shore() {
    check(acceptance::morris_shore_reduction());
}

#[test]
fn criterion_09_stirap() {
    check(acceptance::stirap());
}

#[test]
fn criterion_10_universality_witness() {
    check(acceptance::universality_witness());
}
