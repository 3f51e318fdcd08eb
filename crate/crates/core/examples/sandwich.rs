//! Certified side barriers bracket the discrete solution near their anchor,
//! with a tolerance taken from a coarse/fine self-convergence estimate.

use std::sync::Arc;

use trudinger::barriers::Family;
use trudinger::problem::SpaceTimePoint;
use trudinger::solver::{barrier_sandwich_report, self_convergence_tol, solve, Grid, Lattice, SolveConfig};
use trudinger::suite::{ball_problem, side_anchors};
use trudinger::verify::{sweep, SweepConfig};

fn main() -> trudinger::Result<()> {
    let prob = ball_problem()?;
    let (s, eps) = (0.5, 0.05);
    let cfg = SolveConfig { end_time: Some(s), ..SolveConfig::default() };
    let fine = solve(&prob, Arc::new(Grid::uniform(prob.domain(), 32, Lattice::Vertex)?), &cfg)?;
    let coarse = solve(&prob, Arc::new(Grid::uniform(prob.domain(), 16, Lattice::Vertex)?), &cfg)?;
    let tol = self_convergence_tol(&fine, &coarse)?;
    println!("tolerance {tol:.4}");
    for y in side_anchors(2) {
        let sub = Family::SideSubHighP.construct(&prob, &y, s, eps)?;
        let sup = Family::SideSuperHighP.construct(&prob, &y, s, eps)?;
        let (rs, rp) = (sweep(&sub, &prob, &SweepConfig::default()), sweep(&sup, &prob, &SweepConfig::default()));
        let rep = barrier_sandwich_report(&fine, &prob, (&sub, &rs), (&sup, &rp), &SpaceTimePoint::new(y.clone(), s), eps, tol)?;
        println!(
            "anchor {y:?}: pass={} lower margin {:.4} upper margin {:.4} u(y,s) {:.4} h(y,s) {:.4}",
            rep.pass, rep.lower_margin, rep.upper_margin, rep.anchor_u, rep.anchor_h
        );
    }
    Ok(())
}
