//! Build a side subsolution for p = 3 on the unit disc and certify it by
//! sampling the operator residual on each piece.

use trudinger::barriers::Family;
use trudinger::suite::ball_problem;
use trudinger::verify::{sweep, SweepConfig};

fn main() -> trudinger::Result<()> {
    let prob = ball_problem()?;
    let (y, s, eps) = ([1.0, 0.0], 0.5, 0.05);
    for fam in [Family::SideSubHighP, Family::SideSuperHighP] {
        let barrier = fam.construct(&prob, &y, s, eps)?;
        let report = sweep(&barrier, &prob, &SweepConfig::default());
        println!("{:<18} pass={} worst margin {:.3e}", fam.name(), report.pass, report.worst_margin());
        for piece in &report.pieces {
            println!("    {:?}", piece);
        }
        for f in report.failures() {
            println!("    failed: {f}");
        }
    }
    Ok(())
}
