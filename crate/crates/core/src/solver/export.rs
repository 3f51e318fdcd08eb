//! CSV and JSON artifacts for trajectories and convergence studies.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::convergence::ConvergenceReport;
use super::grid::GridSummary;
use super::scheme::{discrete_kp, SolveConfig, SolveStats, Trajectory};
use crate::error::Result;

/// Columns `t, x1..xn, eta, u`, one row per active node and snapshot.
pub fn write_snapshots_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let grid = &traj.grid;
    let n = grid.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend(["eta".to_string(), "u".to_string()]);
    w.write_record(&header)?;
    let mut x = vec![0.0; n];
    let mut row = Vec::with_capacity(n + 3);
    for snap in &traj.snapshots {
        for &i in grid.interior().iter().chain(grid.boundary()) {
            grid.coords_into(i, &mut x);
            row.clear();
            row.push(snap.t.to_string());
            row.extend(x.iter().map(f64::to_string));
            row.push(snap.eta[i].to_string());
            row.push(snap.u(i).to_string());
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `h, error, order`; the first order cell is empty.
pub fn write_orders_csv<W: Write>(report: &ConvergenceReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["h", "error", "order"])?;
    for r in &report.rows {
        let order = r.order.map(|o| o.to_string()).unwrap_or_default();
        w.write_record([r.h.to_string(), r.error.to_string(), order])?;
    }
    w.flush()?;
    Ok(())
}

/// Statistics of the discrete spatial operator at the last snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub nodes: usize,
    pub max_abs: f64,
    pub mean_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub grid: GridSummary,
    pub config: SolveConfig,
    pub p: f64,
    pub stats: SolveStats,
    pub snapshot_times: Vec<f64>,
    pub final_operator: ResidualStats,
}

impl RunManifest {
    pub fn new(traj: &Trajectory, config: &SolveConfig) -> Result<Self> {
        let last = traj.last();
        let mut max_abs: f64 = 0.0;
        let mut sum = 0.0;
        for &i in traj.grid.interior() {
            let r = discrete_kp(last, i, traj.p)?.abs();
            max_abs = max_abs.max(r);
            sum += r;
        }
        let nodes = traj.grid.interior().len();
        Ok(Self {
            grid: traj.grid.summary(),
            config: config.clone(),
            p: traj.p,
            stats: traj.stats.clone(),
            snapshot_times: traj.times(),
            final_operator: ResidualStats { nodes, max_abs, mean_abs: sum / nodes.max(1) as f64 },
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
