//! End-to-end verification suite: runs every headline check and prints
//! one pass/fail line per criterion.

use evotree::verify;

#[test]
fn acceptance_suite() {
    let results = verify::run_all();
    let mut all_passed = true;
    for r in &results {
        println!(
            "[{}] criterion {:2} {:28} {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.details
        );
        all_passed = all_passed && r.passed;
    }
    assert!(all_passed, "one or more acceptance criteria failed");
}
