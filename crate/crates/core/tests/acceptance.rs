//! Acceptance suite: runs every verification criterion at its pinned
//! tolerance and prints one pass/fail line per criterion.

use steklov_thin::selftest::run_all;

#[test]
fn acceptance_criteria() {
    let report = run_all(42);
    for line in report.render_lines() {
        println!("{line}");
    }
    let failed: Vec<String> = report
        .results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{} ({})", r.name, r.detail))
        .collect();
    assert!(failed.is_empty(), "failed criteria: {}", failed.join("; "));
}
