//! All nine acceptance criteria with metrics and runtimes. Run in release.

use trudinger::suite::Suite;

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    for timed in Suite::new(seed).run_all() {
        println!("{}  [{:.1}s of {:.0}s]", timed.result.summary_line(), timed.seconds, timed.budget_seconds);
        for (k, v) in &timed.result.metrics {
            println!("    {k} = {v:.6e}");
        }
        for f in &timed.result.failures {
            println!("    failed: {f}");
        }
    }
}
