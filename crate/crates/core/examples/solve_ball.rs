//! Solve for p = 3 on the unit disc and export snapshots, a run manifest and
//! the discrete maximum-principle report. Output goes to the directory given
//! as the first argument, or `target/solve_ball`.

use std::fs::{self, File};
use std::path::PathBuf;
use std::sync::Arc;

use trudinger::solver::{max_principle_report, solve, write_snapshots_csv, Grid, Lattice, RunManifest, SolveConfig};
use trudinger::suite::ball_problem;

fn main() -> trudinger::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("target/solve_ball"));
    fs::create_dir_all(&out)?;
    let prob = ball_problem()?;
    let grid = Arc::new(Grid::uniform(prob.domain(), 32, Lattice::Vertex)?);
    println!("{:?}", grid.summary());
    let cfg = SolveConfig { end_time: Some(0.5), ..SolveConfig::default() };
    let traj = solve(&prob, grid, &cfg)?;
    println!("{} steps, dt in [{:.3e}, {:.3e}]", traj.stats.steps, traj.stats.dt_min, traj.stats.dt_max);
    for snap in &traj.snapshots {
        let (hi, lo) = snap.interior_extrema();
        println!("t = {:.3}: u in [{lo:.5}, {hi:.5}]", snap.t);
    }
    let mp = max_principle_report(&traj, &prob, 1e-9);
    println!("maximum principle: pass={} excess {:.2e}", mp.pass, mp.excess());
    write_snapshots_csv(&traj, File::create(out.join("snapshots.csv"))?)?;
    RunManifest::new(&traj, &cfg)?.write(&out.join("manifest.json"))?;
    println!("wrote {}", out.display());
    Ok(())
}
