//! Every barrier family across the exponent regimes, domains and anchors of
//! the certification matrix, with a reduced sample budget.

use trudinger::barriers::Family;
use trudinger::calculus::Exponents;
use trudinger::problem::CylinderProblem;
use trudinger::suite::{initial_anchors, matrix_domains, side_anchors, smooth_datum, MATRIX_REGIMES};
use trudinger::verify::{sweep, SweepConfig};

fn main() -> trudinger::Result<()> {
    let cfg = SweepConfig { samples_per_piece: 2_000, global_samples: 4_000, boundary_samples: 2_000, ..SweepConfig::default() };
    let (mut runs, mut failures) = (0, 0);
    for (p, n) in MATRIX_REGIMES {
        let e = Exponents::new(p, n)?;
        for (name, dom) in matrix_domains(n) {
            let prob = CylinderProblem::new(dom, 1.0, e, smooth_datum())?;
            for fam in Family::ALL.into_iter().filter(|f| f.applies_to(&e)) {
                let anchors = if fam.is_initial() { initial_anchors(n) } else { side_anchors(n) };
                let mut worst = f64::INFINITY;
                for y in anchors {
                    let report = sweep(&fam.construct(&prob, &y, 0.5, 0.05)?, &prob, &cfg);
                    worst = worst.min(report.worst_margin());
                    runs += 1;
                    failures += usize::from(!report.pass);
                }
                println!("p={p} n={n} {name:<8} {:<18} worst margin {worst:.3e}", fam.name());
            }
        }
    }
    println!("{runs} barriers swept, {failures} failed");
    Ok(())
}
