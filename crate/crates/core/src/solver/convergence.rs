//! Grid-refinement studies against closed-form solutions.

use std::f64::consts::{FRAC_PI_6, PI};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::grid::{Grid, Lattice};
use super::reports::{max_principle_report, MaxPrincipleReport};
use super::scheme::{solve, SolveConfig};
use crate::calculus::Exponents;
use crate::domain::SpatialDomain;
use crate::error::{invalid, Result};
use crate::problem::{BoundaryDatum, CylinderProblem};

/// Closed-form solutions of `Δ_p u = (p-1) u^{p-2} u_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExactSolution {
    /// `2 + sin(x1) e^{-t}`, `p = 2`.
    HeatSine,
    /// `exp(a·x + |a|^p t)`.
    PlaneWave { a: Vec<f64>, p: f64 },
    Constant { c: f64 },
}

impl ExactSolution {
    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        match self {
            ExactSolution::HeatSine => 2.0 + x[0].sin() * (-t).exp(),
            ExactSolution::PlaneWave { a, p } => {
                let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
                let ax: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum();
                (ax + na.powf(*p) * t).exp()
            }
            ExactSolution::Constant { c } => *c,
        }
    }

    /// The `p` this solution is exact for, if it singles one out.
    pub fn required_p(&self) -> Option<f64> {
        match self {
            ExactSolution::HeatSine => Some(2.0),
            ExactSolution::PlaneWave { p, .. } => Some(*p),
            ExactSolution::Constant { .. } => None,
        }
    }

    pub fn datum(&self) -> BoundaryDatum {
        let me = self.clone();
        BoundaryDatum::from_space_time(move |x, t| me.value(x, t)).with_label(format!("{self:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSpec {
    pub exact: ExactSolution,
    pub domain: SpatialDomain,
    pub p: f64,
    pub horizon: f64,
    pub lattice: Lattice,
    /// Cell counts per axis for each rung; each rung doubles the last.
    pub ladder: Vec<Vec<usize>>,
    pub solver: SolveConfig,
    /// Order used to normalize maximum-principle excesses.
    pub nominal_order: f64,
}

impl ConvergenceSpec {
    /// `2 + sin(x1) e^{-t}` on `(0,π)×(0,1)^{n-1}`, vertex grids with
    /// `N = 16, 32, 64` cells per axis, `T = 0.5`.
    pub fn heat(n: usize) -> Result<Self> {
        let mut hi = vec![1.0; n];
        hi[0] = PI;
        Ok(Self {
            exact: ExactSolution::HeatSine,
            domain: SpatialDomain::boxed(vec![0.0; n], hi)?,
            p: 2.0,
            horizon: 0.5,
            lattice: Lattice::Vertex,
            ladder: [16, 32, 64].iter().map(|&c| vec![c; n]).collect(),
            solver: SolveConfig::default(),
            nominal_order: 2.0,
        })
    }

    /// `exp(a·x + |a|^3 t)` with `a = 0.5 (cos π/6, sin π/6)` on the unit
    /// square, cell-centred grids, `T = 0.25`.
    pub fn plane_wave() -> Result<Self> {
        let a = vec![0.5 * FRAC_PI_6.cos(), 0.5 * FRAC_PI_6.sin()];
        Ok(Self {
            exact: ExactSolution::PlaneWave { a, p: 3.0 },
            domain: SpatialDomain::boxed(vec![0.0, 0.0], vec![1.0, 1.0])?,
            p: 3.0,
            horizon: 0.25,
            lattice: Lattice::CellCentred,
            ladder: [16, 32, 64].iter().map(|&c| vec![c, c]).collect(),
            solver: SolveConfig::default(),
            nominal_order: 1.0,
        })
    }

    pub fn problem(&self) -> Result<CylinderProblem> {
        if let Some(p) = self.exact.required_p() {
            if p != self.p {
                return Err(invalid(format!("exact solution needs p = {p}, spec has p = {}", self.p)));
            }
        }
        CylinderProblem::new(self.domain.clone(), self.horizon, Exponents::new(self.p, self.domain.dim())?, self.exact.datum())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub cells: Vec<usize>,
    /// Largest spacing of the grid.
    pub h: f64,
    /// Max-norm error of `u` over interior nodes at the end time.
    pub error: f64,
    /// `log2(e_{i-1}/e_i)`; absent on the first rung.
    pub order: Option<f64>,
    pub steps: usize,
    pub seconds: f64,
    pub max_principle: MaxPrincipleReport,
    /// `max principle excess / h^nominal_order`.
    pub excess_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub exact: ExactSolution,
    pub p: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }

    /// Order between the last two rungs.
    pub fn final_order(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.order)
    }

    pub fn errors_decrease(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }
}

/// Solve on every rung and tabulate end-time errors and observed orders.
pub fn convergence_study(spec: &ConvergenceSpec) -> Result<ConvergenceReport> {
    if spec.ladder.len() < 2 {
        return Err(invalid("a convergence study needs at least two grids"));
    }
    let prob = spec.problem()?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(spec.ladder.len());
    for cells in &spec.ladder {
        let started = Instant::now();
        let grid = Arc::new(Grid::new(&spec.domain, cells, spec.lattice)?);
        let traj = solve(&prob, grid.clone(), &spec.solver)?;
        let last = traj.last();
        let mut x = vec![0.0; grid.dim()];
        let error = grid
            .interior()
            .iter()
            .map(|&i| {
                grid.coords_into(i, &mut x);
                (last.u(i) - spec.exact.value(&x, last.t)).abs()
            })
            .fold(0.0, f64::max);
        let h = grid.spacing().iter().copied().fold(0.0, f64::max);
        let order = rows.last().map(|prev| {
            if error == 0.0 || prev.error == 0.0 {
                f64::NAN
            } else {
                (prev.error / error).log2() / (prev.h / h).log2()
            }
        });
        let scale = h.powf(spec.nominal_order);
        let mp = max_principle_report(&traj, &prob, f64::INFINITY);
        let excess_constant = mp.excess() / scale;
        rows.push(ConvergenceRow {
            cells: cells.clone(),
            h,
            error,
            order,
            steps: traj.stats.steps,
            seconds: started.elapsed().as_secs_f64(),
            max_principle: MaxPrincipleReport { tol: excess_constant * scale, pass: true, ..mp },
            excess_constant,
        });
    }
    Ok(ConvergenceReport { exact: spec.exact.clone(), p: spec.p, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_solutions_satisfy_the_equation() {
        // Finite-difference oracle on u directly, independent of the η scheme.
        let pw = ExactSolution::PlaneWave { a: vec![0.3, -0.4], p: 3.0 };
        let (x, t, d) = ([0.2, 0.7], 0.1, 1e-4);
        let u = |x: &[f64], t: f64| pw.value(x, t);
        let ut = (u(&x, t + d) - u(&x, t - d)) / (2.0 * d);
        // Δ_3 u = div(|Du| Du); u is a pure exponential so Du = a u.
        let na = 0.5;
        let lap3 = 2.0 * na * na * na * u(&x, t).powi(2);
        let rhs = 2.0 * u(&x, t) * ut;
        assert!((lap3 - rhs).abs() < 1e-6 * rhs.abs());

        let heat = ExactSolution::HeatSine;
        let uxx = (heat.value(&[0.5 + d], t) - 2.0 * heat.value(&[0.5], t) + heat.value(&[0.5 - d], t)) / (d * d);
        let ut = (heat.value(&[0.5], t + d) - heat.value(&[0.5], t - d)) / (2.0 * d);
        assert!((uxx - ut).abs() < 1e-5);
    }

    #[test]
    fn constant_solution_has_zero_error() {
        let dom = SpatialDomain::ball(vec![0.0, 0.0], 1.0).unwrap();
        let spec = ConvergenceSpec {
            exact: ExactSolution::Constant { c: 1.7 },
            domain: dom,
            p: 3.0,
            horizon: 0.1,
            lattice: Lattice::Vertex,
            ladder: vec![vec![10, 10], vec![20, 20]],
            solver: SolveConfig::default(),
            nominal_order: 1.0,
        };
        let rep = convergence_study(&spec).unwrap();
        for r in &rep.rows {
            assert!(r.error < 1e-14, "{}", r.error);
            assert_eq!(r.max_principle.excess(), 0.0);
        }
    }
}
