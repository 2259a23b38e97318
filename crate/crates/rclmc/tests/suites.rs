//! The built-in verification suites must pass with their baked-in seeds.

use rclmc::verify::{run_suite, SUITE_NAMES};

fn assert_suite_passes(name: &str) {
    let report = run_suite(name).expect("known suite");
    let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).collect();
    assert!(
        report.passed,
        "suite {name}: {} of {} checks failed; first: {:?}",
        failed.len(),
        report.checks.len(),
        failed.first()
    );
}

#[test]
fn recursion_suite_passes() {
    assert_suite_passes("recursion");
}

#[test]
fn contraction_suite_passes() {
    assert_suite_passes("contraction");
}

#[test]
fn stationarity_suite_passes() {
    assert_suite_passes("stationarity");
}

#[test]
fn lowerbound_suite_passes() {
    assert_suite_passes("lowerbound");
}

#[test]
fn bounds_dominance_suite_passes() {
    assert_suite_passes("bounds-dominance");
}

#[test]
fn suite_names_dispatch() {
    for name in SUITE_NAMES {
        assert!(run_suite(name).is_some());
    }
    assert!(run_suite("unknown").is_none());
}
