//! The nine acceptance criteria, run in order with their runtime budgets.
//! One line per criterion goes straight to stdout, past the test harness's
//! output capture.

use std::io::Write;

use trudinger::suite::{Suite, CRITERIA};

#[test]
fn acceptance_criteria() {
    let suite = Suite::new(0);
    let mut out = std::io::stdout().lock();
    let mut failed = Vec::new();
    for (id, _, _) in CRITERIA {
        let timed = suite.run(id).expect("every listed criterion runs");
        writeln!(out, "{}  [{:.1}s of {:.0}s]", timed.result.summary_line(), timed.seconds, timed.budget_seconds).unwrap();
        for f in &timed.result.failures {
            writeln!(out, "    {f}").unwrap();
        }
        if !timed.pass() {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "criteria failed or overran their budget: {failed:?}");
}
