//! Runs every acceptance criterion and prints one line per criterion.

use nls_core::harness::acceptance::run_all;

#[test]
fn acceptance_suite() {
    let filter = std::env::var("NLS_ACCEPT_FILTER").ok();
    let report = run_all(filter.as_deref(), 0);
    println!();
    for r in &report.results {
        println!("{}", r.line());
    }
    println!("note: {}", report.substitution_note);
    let failed: Vec<String> = report.results.iter().filter(|r| !r.passed).map(|r| r.name.clone()).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
