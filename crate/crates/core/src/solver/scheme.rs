//! Explicit finite differences for `η_t = [L_p(Dη, D²η) + (p-1)|Dη|^p]/(p-1)`.
//!
//! Central first differences, standard second differences and four-point
//! cross terms. Every stencil is exact on affine data, so a plane wave is
//! advanced exactly at interior nodes; the only error source there is the
//! boundary projection.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{Grid, NodeKind};
use crate::calculus::{lp_raw, pow_abs};
use crate::error::{invalid, Error, Result};
use crate::problem::CylinderProblem;

/// `η` on a grid at one time.
#[derive(Clone, Debug)]
pub struct GridField {
    pub grid: Arc<Grid>,
    pub t: f64,
    /// One entry per node; exterior entries are `NaN`.
    pub eta: Vec<f64>,
}

impl GridField {
    pub fn u(&self, idx: usize) -> f64 {
        self.eta[idx].exp()
    }

    /// `(max, min)` of `u` over interior nodes.
    pub fn interior_extrema(&self) -> (f64, f64) {
        self.grid.interior().iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), &i| {
            let u = self.u(i);
            (hi.max(u), lo.min(u))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    /// Fraction of the stability bound used per step, in `(0, 1]`.
    pub safety: f64,
    /// Initial gradient cap `G`; `None` starts from 1.1 times the largest
    /// discrete gradient of the initial field.
    pub gradient_cap: Option<f64>,
    /// Defaults to the problem horizon.
    pub end_time: Option<f64>,
    /// Evenly spaced snapshot intervals over `[0, end]`.
    pub snapshots: usize,
    /// Additional snapshot times in `(0, end]`.
    pub extra_times: Vec<f64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { safety: 0.5, gradient_cap: None, end_time: None, snapshots: 4, extra_times: Vec::new() }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(invalid(format!("safety factor must lie in (0, 1], got {}", self.safety)));
        }
        if let Some(g) = self.gradient_cap {
            if !(g > 0.0 && g.is_finite()) {
                return Err(invalid(format!("gradient cap must be positive, got {g}")));
            }
        }
        if let Some(t) = self.end_time {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid(format!("end time must be positive, got {t}")));
            }
        }
        if self.snapshots == 0 {
            return Err(invalid("need at least one snapshot interval"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub steps: usize,
    pub dt_min: f64,
    pub dt_max: f64,
    pub final_gradient_cap: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: Arc<Grid>,
    pub p: f64,
    /// Increasing in time; the first is `t = 0`, the last is the end time.
    pub snapshots: Vec<GridField>,
    pub stats: SolveStats,
}

impl Trajectory {
    pub fn last(&self) -> &GridField {
        self.snapshots.last().expect("trajectories always hold the initial snapshot")
    }

    /// Snapshot at time `t`, up to `1e-12` relative.
    pub fn at_time(&self, t: f64) -> Option<&GridField> {
        let tol = 1e-12 * self.last().t.max(1.0);
        self.snapshots.iter().find(|f| (f.t - t).abs() <= tol)
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|f| f.t).collect()
    }
}

/// Discrete jet `(q_h, X_h)` at an interior node; `X_h` row-major.
fn discrete_jet(grid: &Grid, eta: &[f64], idx: usize, q: &mut [f64], x: &mut [f64]) {
    let n = grid.dim();
    let (h, st) = (grid.spacing(), grid.strides());
    let c = eta[idx];
    for i in 0..n {
        let (fp, fm) = (eta[idx + st[i]], eta[idx - st[i]]);
        q[i] = (fp - fm) / (2.0 * h[i]);
        x[i * n + i] = (fp - 2.0 * c + fm) / (h[i] * h[i]);
        for j in (i + 1)..n {
            let pp = eta[idx + st[i] + st[j]];
            let pm = eta[idx + st[i] - st[j]];
            let mp = eta[idx - st[i] + st[j]];
            let mm = eta[idx - st[i] - st[j]];
            let v = (pp - pm - mp + mm) / (4.0 * h[i] * h[j]);
            x[i * n + j] = v;
            x[j * n + i] = v;
        }
    }
}

fn kp_kernel(grid: &Grid, eta: &[f64], idx: usize, p: f64) -> f64 {
    let mut q = [0.0; 3];
    let mut x = [0.0; 9];
    let n = grid.dim();
    discrete_jet(grid, eta, idx, &mut q[..n], &mut x[..n * n]);
    let qn = q[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
    lp_raw(&q[..n], &x[..n * n], n, p) + (p - 1.0) * pow_abs(qn, p)
}

/// `L_p(q_h, X_h) + (p-1)|q_h|^p` at an interior node.
pub fn discrete_kp(field: &GridField, idx: usize, p: f64) -> Result<f64> {
    if idx >= field.grid.len() || field.grid.kind(idx) != NodeKind::Interior {
        return Err(Error::Domain(format!("node {idx} is not interior")));
    }
    Ok(kp_kernel(&field.grid, &field.eta, idx, p))
}

/// Largest `|q_h|` over interior nodes.
pub fn max_discrete_gradient(grid: &Grid, eta: &[f64]) -> f64 {
    let n = grid.dim();
    let (h, st) = (grid.spacing(), grid.strides());
    grid.interior()
        .iter()
        .map(|&idx| {
            (0..n)
                .map(|i| {
                    let d = (eta[idx + st[i]] - eta[idx - st[i]]) / (2.0 * h[i]);
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// `safety · min(h²/(2n G^{p-2}), h/(p G^{p-1}))` with `G` floored at 1
/// and `h` the smallest spacing.
pub fn cfl_dt(grid: &Grid, p: f64, gradient_cap: f64, safety: f64) -> f64 {
    let h = grid.min_spacing();
    let g = gradient_cap.max(1.0);
    let n = grid.dim() as f64;
    safety * (h * h / (2.0 * n * g.powf(p - 2.0))).min(h / (p * g.powf(p - 1.0)))
}

fn log_datum(prob: &CylinderProblem, x: &[f64], t: f64, initial: bool) -> Result<f64> {
    let v = if initial { prob.datum().initial(x) } else { prob.datum().side(x, t) };
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Positivity(format!("datum value {v} at x = {x:?}, t = {t}")));
    }
    Ok(v.ln())
}

/// `η(·, 0)`: `log f` at interior nodes, `log h` at boundary projections.
pub fn initial_field(prob: &CylinderProblem, grid: Arc<Grid>) -> Result<GridField> {
    let mut eta = vec![f64::NAN; grid.len()];
    for &i in grid.interior() {
        eta[i] = log_datum(prob, &grid.coords(i), 0.0, true)?;
    }
    for &i in grid.boundary() {
        let y = grid.projection(i).expect("boundary nodes carry projections");
        eta[i] = log_datum(prob, y, 0.0, false)?;
    }
    Ok(GridField { grid, t: 0.0, eta })
}

/// One forward-Euler step; boundary nodes take `log h(projection, t+dt)`.
/// `step_index` only labels a divergence error.
pub fn step(
    prob: &CylinderProblem,
    field: &GridField,
    dt: f64,
    gradient_cap: f64,
    safety: f64,
    step_index: usize,
) -> Result<GridField> {
    let grid = &field.grid;
    let p = prob.exponents().p();
    let limit = cfl_dt(grid, p, gradient_cap, safety);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::RejectedStep { dt, limit });
    }
    let t_new = field.t + dt;
    let updates: Vec<f64> = grid
        .interior()
        .par_iter()
        .map(|&i| field.eta[i] + dt * kp_kernel(grid, &field.eta, i, p) / (p - 1.0))
        .collect();
    let mut eta = field.eta.clone();
    for (&i, v) in grid.interior().iter().zip(updates) {
        if !v.is_finite() {
            return Err(Error::Divergence { step: step_index, t: t_new });
        }
        eta[i] = v;
    }
    for &i in grid.boundary() {
        let y = grid.projection(i).expect("boundary nodes carry projections");
        eta[i] = log_datum(prob, y, t_new, false)?;
    }
    Ok(GridField { grid: grid.clone(), t: t_new, eta })
}

fn snapshot_times(cfg: &SolveConfig, end: f64) -> Vec<f64> {
    let mut times: Vec<f64> = (1..=cfg.snapshots).map(|i| end * i as f64 / cfg.snapshots as f64).collect();
    times.extend(cfg.extra_times.iter().copied().filter(|&t| t > 0.0 && t <= end));
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * end);
    times
}

/// March from `t = 0` to the end time, landing exactly on every snapshot.
pub fn solve(prob: &CylinderProblem, grid: Arc<Grid>, cfg: &SolveConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if grid.dim() != prob.exponents().n() {
        return Err(invalid(format!("grid dimension {} does not match n = {}", grid.dim(), prob.exponents().n())));
    }
    let end = cfg.end_time.unwrap_or_else(|| prob.horizon());
    if end > prob.horizon() * (1.0 + 1e-12) {
        return Err(invalid(format!("end time {end} exceeds the horizon {}", prob.horizon())));
    }
    let p = prob.exponents().p();
    let mut field = initial_field(prob, grid.clone())?;
    let mut g = cfg
        .gradient_cap
        .unwrap_or_else(|| 1.1 * max_discrete_gradient(&grid, &field.eta))
        .max(1e-12);
    let mut snapshots = vec![field.clone()];
    let mut stats = SolveStats { steps: 0, dt_min: f64::INFINITY, dt_max: 0.0, final_gradient_cap: g };
    for target in snapshot_times(cfg, end) {
        while field.t < target {
            let limit = cfl_dt(&grid, p, g, cfg.safety);
            let remaining = target - field.t;
            let dt = limit.min(remaining);
            field = step(prob, &field, dt, g, cfg.safety, stats.steps)?;
            if dt == remaining {
                field.t = target;
            }
            stats.steps += 1;
            stats.dt_min = stats.dt_min.min(dt);
            stats.dt_max = stats.dt_max.max(dt);
            g = g.max(1.1 * max_discrete_gradient(&grid, &field.eta));
        }
        snapshots.push(field.clone());
    }
    stats.final_gradient_cap = g;
    Ok(Trajectory { grid, p, snapshots, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::Exponents;
    use crate::domain::SpatialDomain;
    use crate::problem::BoundaryDatum;
    use crate::solver::grid::Lattice;

    fn field_from(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> GridField {
        let mut eta = vec![f64::NAN; grid.len()];
        for &i in grid.interior().iter().chain(grid.boundary()) {
            eta[i] = f(&grid.coords(i));
        }
        GridField { grid: grid.clone(), t: 0.0, eta }
    }

    fn square(cells: usize) -> Arc<Grid> {
        let dom = SpatialDomain::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        Arc::new(Grid::uniform(&dom, cells, Lattice::Vertex).unwrap())
    }

    #[test]
    fn stencils_are_exact_on_affine_and_quadratic_data() {
        let g = square(10);
        let a = [0.3, -0.7];
        let lin = field_from(&g, |x| 0.2 + a[0] * x[0] + a[1] * x[1]);
        let quad = field_from(&g, |x| x[0] * x[0]);
        let na: f64 = (a[0] * a[0] + a[1] * a[1]).sqrt();
        for p in [2.0, 2.5, 3.0, 4.0] {
            for &i in g.interior() {
                let r = discrete_kp(&lin, i, p).unwrap();
                let want = (p - 1.0) * na.powf(p);
                assert!((r - want).abs() <= 1e-12 * (1.0 + want), "p = {p}: {r} vs {want}");
            }
        }
        // Second differences are exact on x1², central ones give q = 2 x1.
        for &i in g.interior() {
            let x1 = g.coords(i)[0];
            let want = 2.0 + 4.0 * x1 * x1;
            assert!((discrete_kp(&quad, i, 2.0).unwrap() - want).abs() < 1e-9);
        }
        let b = g.boundary()[0];
        assert!(matches!(discrete_kp(&lin, b, 3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn cfl_formula_values() {
        let dom = SpatialDomain::boxed(vec![0.0, 0.0], vec![0.16, 0.16]).unwrap();
        let g = Grid::uniform(&dom, 16, Lattice::Vertex).unwrap();
        let dt = cfl_dt(&g, 2.0, 0.5, 0.5);
        assert!((dt - 1.25e-5).abs() < 1e-18);
        let h: f64 = 0.01;
        let dt3 = cfl_dt(&g, 3.0, 1.0, 0.7);
        assert!((dt3 - 0.7 * (h * h / 4.0).min(h / 3.0)).abs() < 1e-18);
        let mut prev = f64::INFINITY;
        for cap in [1.0, 2.0, 5.0, 50.0, 500.0] {
            let d = cfl_dt(&g, 3.0, cap, 1.0);
            assert!(d <= prev);
            prev = d;
        }
    }

    #[test]
    fn oversized_steps_are_rejected() {
        let dom = SpatialDomain::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let prob = CylinderProblem::new(dom, 1.0, Exponents::new(3.0, 2).unwrap(), BoundaryDatum::constant(2.0)).unwrap();
        let g = square(10);
        let f = initial_field(&prob, g.clone()).unwrap();
        let limit = cfl_dt(&g, 3.0, 1.0, 0.5);
        assert!(matches!(step(&prob, &f, 2.0 * limit, 1.0, 0.5, 0), Err(Error::RejectedStep { .. })));
        let next = step(&prob, &f, limit, 1.0, 0.5, 0).unwrap();
        for &i in g.interior() {
            assert_eq!(next.eta[i], 2f64.ln());
        }
    }

    #[test]
    fn snapshots_land_exactly() {
        let dom = SpatialDomain::ball(vec![0.0, 0.0], 1.0).unwrap();
        let prob = CylinderProblem::new(dom.clone(), 0.3, Exponents::new(2.0, 2).unwrap(), BoundaryDatum::constant(3.0)).unwrap();
        let grid = Arc::new(Grid::uniform(&dom, 12, Lattice::Vertex).unwrap());
        let cfg = SolveConfig { snapshots: 3, extra_times: vec![0.17], ..SolveConfig::default() };
        let tr = solve(&prob, grid, &cfg).unwrap();
        let times = tr.times();
        assert_eq!(times.len(), 5);
        assert_eq!(times[0], 0.0);
        assert!(tr.at_time(0.17).is_some());
        assert_eq!(*times.last().unwrap(), 0.3);
        for f in &tr.snapshots {
            let (hi, lo) = f.interior_extrema();
            assert!((hi - 3.0).abs() < 1e-14 && (lo - 3.0).abs() < 1e-14);
        }
    }
}
