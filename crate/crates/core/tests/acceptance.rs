//! Runs every acceptance criterion and prints one PASS/FAIL line each.
//!
//! `cargo test -p photonloc-core --test acceptance -- --nocapture`

use photonloc_core::validation::{run_criterion, CRITERIA};

const SEED: u64 = 20240611;

#[test]
fn acceptance_suite() {
    let mut failed = Vec::new();
    for (id, _) in CRITERIA {
        let r = run_criterion(id, SEED);
        let metrics: Vec<String> = r.metrics.iter().map(|(k, v)| format!("{k}={v:.6e}")).collect();
        println!(
            "{} criterion {:>2} {:<26} {:>7.2}s  {}{}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.seconds,
            metrics.join(" "),
            if r.detail.is_empty() {
                String::new()
            } else {
                format!("  [{}]", r.detail)
            }
        );
        if !r.passed {
            failed.push(r.name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
