//! Discrete checks of the maximum principle, comparison and barrier
//! ordering on computed trajectories.

use serde::{Deserialize, Serialize};

use super::grid::{Lattice, NodeKind};
use super::scheme::Trajectory;
use crate::barriers::{Barrier, Orientation};
use crate::error::{invalid, Result};
use crate::problem::{CylinderProblem, SpaceTimePoint};
use crate::verify::VerificationReport;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleReport {
    /// `sup` and `inf` of `h` over `P_T`: sampled extrema joined with the
    /// grid's own parabolic-boundary values.
    pub sup_boundary: f64,
    pub inf_boundary: f64,
    pub max_interior: f64,
    pub min_interior: f64,
    /// `max(0, max_interior - sup_boundary)`.
    pub upper_excess: f64,
    /// `max(0, inf_boundary - min_interior)`.
    pub lower_excess: f64,
    pub tol: f64,
    pub snapshots: usize,
    pub pass: bool,
}

impl MaxPrincipleReport {
    pub fn excess(&self) -> f64 {
        self.upper_excess.max(self.lower_excess)
    }
}

/// `(sup, inf)` of the trajectory over its discrete parabolic boundary:
/// every active node at `t = 0` and boundary nodes afterwards.
fn boundary_extrema(traj: &Trajectory, f: impl Fn(&super::scheme::GridField, usize) -> f64) -> (f64, f64) {
    let grid = &traj.grid;
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    let mut visit = |v: f64| {
        hi = hi.max(v);
        lo = lo.min(v);
    };
    let first = &traj.snapshots[0];
    for &i in grid.interior() {
        visit(f(first, i));
    }
    for snap in &traj.snapshots {
        for &i in grid.boundary() {
            visit(f(snap, i));
        }
    }
    (hi, lo)
}

pub fn max_principle_report(traj: &Trajectory, prob: &CylinderProblem, tol: f64) -> MaxPrincipleReport {
    let (grid_hi, grid_lo) = boundary_extrema(traj, |s, i| s.u(i));
    let sup_boundary = grid_hi.max(prob.big_m());
    let inf_boundary = grid_lo.min(prob.m());
    let mut max_interior = f64::NEG_INFINITY;
    let mut min_interior = f64::INFINITY;
    for snap in &traj.snapshots {
        let (hi, lo) = snap.interior_extrema();
        max_interior = max_interior.max(hi);
        min_interior = min_interior.min(lo);
    }
    let upper_excess = (max_interior - sup_boundary).max(0.0);
    let lower_excess = (inf_boundary - min_interior).max(0.0);
    MaxPrincipleReport {
        sup_boundary,
        inf_boundary,
        max_interior,
        min_interior,
        upper_excess,
        lower_excess,
        tol,
        snapshots: traj.snapshots.len(),
        pass: upper_excess <= tol && lower_excess <= tol,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `min (v - u)` over active nodes and snapshots.
    pub ordering_margin: f64,
    pub ordered: bool,
    /// `sup u/v` over interior nodes of `Ω_T`.
    pub quotient_interior: f64,
    /// `sup u/v` over the discrete parabolic boundary.
    pub quotient_boundary: f64,
    pub quotient_bound: bool,
    /// Range of `η_v - η_u` over active nodes and snapshots.
    pub eta_gap_min: f64,
    pub eta_gap_max: f64,
    pub tol: f64,
    pub pass: bool,
}

impl ComparisonReport {
    /// Largest deviation of `η_v - η_u` from a constant `shift`.
    pub fn shift_deviation(&self, shift: f64) -> f64 {
        (self.eta_gap_max - shift).abs().max((self.eta_gap_min - shift).abs())
    }
}

/// Pointwise ordering `u <= v` and `sup_{Ω_T} u/v <= sup_{P_T} u/v`.
pub fn comparison_report(u: &Trajectory, v: &Trajectory, tol: f64) -> Result<ComparisonReport> {
    if !u.grid.same_layout(&v.grid) || u.times() != v.times() {
        return Err(invalid("comparison needs identical grids and snapshot times"));
    }
    let grid = &u.grid;
    let mut ordering_margin = f64::INFINITY;
    let mut quotient_interior = f64::NEG_INFINITY;
    let mut gap_min = f64::INFINITY;
    let mut gap_max = f64::NEG_INFINITY;
    for (su, sv) in u.snapshots.iter().zip(&v.snapshots) {
        for &i in grid.interior().iter().chain(grid.boundary()) {
            ordering_margin = ordering_margin.min(sv.u(i) - su.u(i));
            let gap = sv.eta[i] - su.eta[i];
            gap_min = gap_min.min(gap);
            gap_max = gap_max.max(gap);
            if grid.kind(i) == NodeKind::Interior {
                quotient_interior = quotient_interior.max((su.eta[i] - sv.eta[i]).exp());
            }
        }
    }
    let quotient_boundary = {
        let first = &v.snapshots[0];
        let mut hi = f64::NEG_INFINITY;
        for &i in grid.interior() {
            hi = hi.max((u.snapshots[0].eta[i] - first.eta[i]).exp());
        }
        for (su, sv) in u.snapshots.iter().zip(&v.snapshots) {
            for &i in grid.boundary() {
                hi = hi.max((su.eta[i] - sv.eta[i]).exp());
            }
        }
        hi
    };
    let ordered = ordering_margin >= -tol;
    let quotient_bound = quotient_interior <= quotient_boundary + tol;
    Ok(ComparisonReport {
        ordering_margin,
        ordered,
        quotient_interior,
        quotient_boundary,
        quotient_bound,
        eta_gap_min: gap_min,
        eta_gap_max: gap_max,
        tol,
        pass: ordered && quotient_bound,
    })
}

/// `2 max |u_h - u_{2h}|` over interior nodes shared by two nested vertex
/// grids, at the snapshot times they share.
pub fn self_convergence_tol(fine: &Trajectory, coarse: &Trajectory) -> Result<f64> {
    let (gf, gc) = (&fine.grid, &coarse.grid);
    let nested = gf.lattice() == Lattice::Vertex
        && gc.lattice() == Lattice::Vertex
        && gf.dim() == gc.dim()
        && gf.cells().iter().zip(gc.cells()).all(|(f, c)| *f == 2 * c)
        && gf.summary().lo == gc.summary().lo;
    if !nested {
        return Err(invalid("self-convergence needs vertex grids with the fine one halving the coarse spacing"));
    }
    let n = gc.dim();
    let mut multi = vec![0usize; n];
    let mut worst: f64 = 0.0;
    let mut shared = 0usize;
    for sc in &coarse.snapshots {
        let Some(sf) = fine.at_time(sc.t) else { continue };
        shared += 1;
        for &i in gc.interior() {
            gc.unravel(i, &mut multi);
            let j: usize = (0..n).map(|a| 2 * multi[a] * gf.strides()[a]).sum();
            if gf.kind(j) == NodeKind::Interior {
                worst = worst.max((sf.u(j) - sc.u(i)).abs());
            }
        }
    }
    if shared == 0 {
        return Err(invalid("the two trajectories share no snapshot times"));
    }
    Ok(2.0 * worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub anchor: SpaceTimePoint,
    pub eps: f64,
    pub tol: f64,
    pub nodes_checked: usize,
    /// `min (u - sub)` over checked nodes.
    pub lower_margin: f64,
    /// `min (super - u)` over checked nodes.
    pub upper_margin: f64,
    /// `u` at the boundary node whose projection is nearest `y`, at `t = s`.
    pub anchor_u: f64,
    pub anchor_h: f64,
    /// Distance from `y` to that projection.
    pub anchor_offset: f64,
    pub anchor_ok: bool,
    pub pass: bool,
}

fn require_verified(b: &Barrier, report: &VerificationReport, kind: Orientation, anchor: &SpaceTimePoint) -> Result<()> {
    if b.kind != kind || report.kind != kind {
        return Err(invalid(format!("expected a {kind:?} barrier, got {:?}", b.kind)));
    }
    if !report.pass {
        return Err(invalid(format!("barrier {} failed verification: {:?}", report.barrier, report.failures())));
    }
    if report.anchor != b.anchor || b.anchor != *anchor {
        return Err(invalid("barrier and report anchors disagree"));
    }
    Ok(())
}

/// `sub <= u <= super` at every active node and snapshot, up to `tol`;
/// boundary nodes are compared at their projection. At the anchor,
/// `h - 2ε - tol <= u <= h + 2ε + tol`.
#[allow(clippy::too_many_arguments)]
pub fn barrier_sandwich_report(
    traj: &Trajectory,
    prob: &CylinderProblem,
    sub: (&Barrier, &VerificationReport),
    sup: (&Barrier, &VerificationReport),
    anchor: &SpaceTimePoint,
    eps: f64,
    tol: f64,
) -> Result<SandwichReport> {
    require_verified(sub.0, sub.1, Orientation::Sub, anchor)?;
    require_verified(sup.0, sup.1, Orientation::Super, anchor)?;
    let grid = &traj.grid;
    let snap = traj
        .at_time(anchor.t)
        .ok_or_else(|| invalid(format!("no snapshot at the anchor time {}", anchor.t)))?;
    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    let mut nodes_checked = 0;
    for field in &traj.snapshots {
        for &i in grid.interior().iter().chain(grid.boundary()) {
            let x = match grid.projection(i) {
                Some(y) => y.to_vec(),
                None => grid.coords(i),
            };
            let pt = SpaceTimePoint::new(x, field.t);
            let u = field.u(i);
            lower_margin = lower_margin.min(u - sub.0.eval_u(&pt));
            upper_margin = upper_margin.min(sup.0.eval_u(&pt) - u);
            nodes_checked += 1;
        }
    }
    let (node, offset) = grid
        .boundary()
        .iter()
        .map(|&i| {
            let y = grid.projection(i).expect("boundary nodes carry projections");
            let d = y.iter().zip(&anchor.x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            (i, d)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| invalid("grid has no boundary nodes"))?;
    let anchor_u = snap.u(node);
    let anchor_h = prob.eval_h(anchor)?;
    let anchor_ok = anchor_u >= anchor_h - 2.0 * eps - tol && anchor_u <= anchor_h + 2.0 * eps + tol;
    Ok(SandwichReport {
        anchor: anchor.clone(),
        eps,
        tol,
        nodes_checked,
        lower_margin,
        upper_margin,
        anchor_u,
        anchor_h,
        anchor_offset: offset,
        anchor_ok,
        pass: anchor_ok && lower_margin >= -tol && upper_margin >= -tol,
    })
}
