//! Ordered data give ordered solutions, and scaling the datum by `c` shifts
//! `η = log u` by `log c`.

use std::sync::Arc;

use trudinger::solver::{comparison_report, solve, Grid, Lattice, SolveConfig};
use trudinger::suite::{ball_problem, smooth_datum};

fn main() -> trudinger::Result<()> {
    let prob = ball_problem()?;
    let grid = Arc::new(Grid::uniform(prob.domain(), 24, Lattice::Vertex)?);
    let cfg = SolveConfig { end_time: Some(0.25), ..SolveConfig::default() };
    let u = solve(&prob, grid.clone(), &cfg)?;

    let raised = solve(&prob.with_datum(smooth_datum().shifted(0.5))?, grid.clone(), &cfg)?;
    let rep = comparison_report(&u, &raised, 1e-9)?;
    println!("h vs h + 0.5: ordered={} margin {:.4} quotient {:.6} <= {:.6}", rep.ordered, rep.ordering_margin, rep.quotient_interior, rep.quotient_boundary);

    let c = 3.0f64;
    let scaled = solve(&prob.with_datum(smooth_datum().scaled(c))?, grid, &cfg)?;
    let rep = comparison_report(&u, &scaled, 1e-9)?;
    println!("h vs 3h: η shift deviation from log 3 is {:.2e}", rep.shift_deviation(c.ln()));
    Ok(())
}
