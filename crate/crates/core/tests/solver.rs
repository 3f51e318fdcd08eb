//! Solver behaviour on data with known answers.

use std::sync::Arc;

use proptest::prelude::*;
use trudinger::barriers::Family;
use trudinger::calculus::Exponents;
use trudinger::domain::SpatialDomain;
use trudinger::problem::{BoundaryDatum, CylinderProblem, SpaceTimePoint};
use trudinger::solver::*;
use trudinger::suite::{ball_problem, smooth_datum};
use trudinger::verify::{sweep, SweepConfig};
use trudinger::Error;

fn square_problem(p: f64, datum: BoundaryDatum, horizon: f64) -> CylinderProblem {
    let dom = SpatialDomain::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    CylinderProblem::new(dom, horizon, Exponents::new(p, 2).unwrap(), datum).unwrap()
}

#[test]
fn cfl_bound_matches_hand_computation() {
    let dom = SpatialDomain::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let grid = Grid::uniform(&dom, 10, Lattice::Vertex).unwrap();
    // h = 0.1, n = 2, p = 3, G = 2: min(0.01/(4·2), 0.1/(3·4)) = 0.00125.
    assert!((cfl_dt(&grid, 3.0, 2.0, 1.0) - 0.00125).abs() < 1e-15);
    // G below 1 is treated as 1; at p = 2 the diffusive bound h²/(2n) wins.
    assert!((cfl_dt(&grid, 2.0, 0.3, 0.5) - 0.5 * 0.01 / 4.0).abs() < 1e-15);
    // p = 6, G = 10: diffusive 0.01/(4·10^4) = 2.5e-7 against 0.1/(6·10^5).
    assert!((cfl_dt(&grid, 6.0, 10.0, 1.0) - 0.1 / 6e5).abs() < 1e-18);
}

#[test]
fn plane_waves_advance_exactly_in_one_step() {
    // η = b·x + |b|^p t is affine in x and linear in t, so both the
    // stencils and forward Euler are exact.
    for p in [2.0, 3.0, 4.5] {
        let b = [0.7, -0.4];
        let exact = ExactSolution::PlaneWave { a: b.to_vec(), p };
        let prob = square_problem(p, exact.datum(), 1.0);
        let grid = Arc::new(Grid::uniform(prob.domain(), 16, Lattice::Vertex).unwrap());
        let f0 = initial_field(&prob, grid.clone()).unwrap();
        let g = 1.1 * max_discrete_gradient(&grid, &f0.eta);
        let dt = cfl_dt(&grid, p, g, 0.5);
        let f1 = step(&prob, &f0, dt, g, 0.5, 0).unwrap();
        let mut x = vec![0.0; 2];
        for &i in grid.interior() {
            grid.coords_into(i, &mut x);
            let want = exact.value(&x, dt).ln();
            assert!((f1.eta[i] - want).abs() < 1e-12, "p={p} node {i}: {} vs {want}", f1.eta[i]);
        }
        assert!(matches!(step(&prob, &f0, 2.0 * dt, g, 0.5, 0), Err(Error::RejectedStep { .. })));
    }
}

#[test]
fn constant_data_stay_constant() {
    let prob = square_problem(3.0, BoundaryDatum::constant(2.5), 0.2);
    let grid = Arc::new(Grid::uniform(prob.domain(), 12, Lattice::CellCentred).unwrap());
    let traj = solve(&prob, grid.clone(), &SolveConfig::default()).unwrap();
    for snap in &traj.snapshots {
        for &i in grid.interior().iter().chain(grid.boundary()) {
            assert!((snap.u(i) - 2.5).abs() < 1e-13);
        }
    }
    assert_eq!(traj.times().len(), 5);
    assert!((traj.last().t - 0.2).abs() < 1e-15);
}

#[test]
fn heat_step_is_the_five_point_laplacian() {
    let prob = square_problem(2.0, smooth_datum(), 1.0);
    let grid = Arc::new(Grid::uniform(prob.domain(), 10, Lattice::Vertex).unwrap());
    let f0 = initial_field(&prob, grid.clone()).unwrap();
    let dt = cfl_dt(&grid, 2.0, 1.0, 0.5);
    let f1 = step(&prob, &f0, dt, 1.0, 0.5, 0).unwrap();
    let st = grid.strides();
    let h = grid.spacing()[0];
    for &i in grid.interior() {
        let e = &f0.eta;
        let lap = (e[i + st[0]] + e[i - st[0]] + e[i + st[1]] + e[i - st[1]] - 4.0 * e[i]) / (h * h);
        let gx = (e[i + st[0]] - e[i - st[0]]) / (2.0 * h);
        let gy = (e[i + st[1]] - e[i - st[1]]) / (2.0 * h);
        let want = e[i] + dt * (lap + gx * gx + gy * gy);
        assert!((f1.eta[i] - want).abs() < 1e-12);
    }
}

#[test]
fn self_comparison_is_tight() {
    let prob = square_problem(3.0, smooth_datum(), 0.1);
    let grid = Arc::new(Grid::uniform(prob.domain(), 12, Lattice::Vertex).unwrap());
    let traj = solve(&prob, grid, &SolveConfig::default()).unwrap();
    let rep = comparison_report(&traj, &traj, 1e-12).unwrap();
    assert!(rep.pass && rep.ordered && rep.quotient_bound);
    assert_eq!(rep.ordering_margin, 0.0);
    assert_eq!(rep.quotient_interior, 1.0);
    assert_eq!(rep.shift_deviation(0.0), 0.0);
}

#[test]
fn maximum_principle_holds_on_the_ball() {
    let prob = ball_problem().unwrap();
    let grid = Arc::new(Grid::uniform(prob.domain(), 16, Lattice::Vertex).unwrap());
    let cfg = SolveConfig { end_time: Some(0.3), ..SolveConfig::default() };
    let traj = solve(&prob, grid, &cfg).unwrap();
    let rep = max_principle_report(&traj, &prob, 1e-9);
    assert!(rep.pass, "excess {}", rep.excess());
    assert!(rep.max_interior <= rep.sup_boundary && rep.min_interior >= rep.inf_boundary);
}

#[test]
fn sandwich_rejects_an_unverified_barrier() {
    let prob = ball_problem().unwrap();
    let grid = Arc::new(Grid::uniform(prob.domain(), 16, Lattice::Vertex).unwrap());
    let cfg = SolveConfig { end_time: Some(0.5), ..SolveConfig::default() };
    let traj = solve(&prob, grid, &cfg).unwrap();
    let (y, s, eps) = ([1.0, 0.0], 0.5, 0.05);
    let sweep_cfg = SweepConfig { samples_per_piece: 2000, global_samples: 2000, boundary_samples: 2000, ..SweepConfig::default() };
    let sub = Family::SideSubHighP.construct(&prob, &y, s, eps).unwrap();
    let sub_rep = sweep(&sub, &prob, &sweep_cfg);
    let sup = Family::SideSuperHighP.construct(&prob, &y, s, eps).unwrap().with_amplitude_factor(0.5).unwrap();
    let sup_rep = sweep(&sup, &prob, &sweep_cfg);
    assert!(sub_rep.pass && !sup_rep.pass);
    let anchor = SpaceTimePoint::new(y.to_vec(), s);
    let out = barrier_sandwich_report(&traj, &prob, (&sub, &sub_rep), (&sup, &sup_rep), &anchor, eps, 0.1);
    assert!(matches!(out, Err(Error::InvalidInput(_))));
    // Swapped roles are refused as well.
    let out = barrier_sandwich_report(&traj, &prob, (&sup, &sup_rep), (&sub, &sub_rep), &anchor, eps, 0.1);
    assert!(matches!(out, Err(Error::InvalidInput(_))));
}

#[test]
fn non_positive_data_are_refused() {
    let dom = SpatialDomain::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let datum = BoundaryDatum::from_space_time(|x, _| x[0] - 0.5);
    let out = CylinderProblem::new(dom, 0.1, Exponents::new(3.0, 2).unwrap(), datum);
    assert!(matches!(out, Err(Error::Positivity(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Scaling `h` by `c` shifts `η` by `log c` at every node and snapshot.
    #[test]
    fn scaling_the_datum_shifts_eta(c in 0.05f64..20.0, p in 2.0f64..4.0) {
        let base = square_problem(p, smooth_datum(), 0.05);
        let scaled = base.with_datum(smooth_datum().scaled(c)).unwrap();
        let grid = Arc::new(Grid::uniform(base.domain(), 10, Lattice::Vertex).unwrap());
        let u = solve(&base, grid.clone(), &SolveConfig::default()).unwrap();
        let v = solve(&scaled, grid.clone(), &SolveConfig::default()).unwrap();
        prop_assert_eq!(u.stats.steps, v.stats.steps);
        for (a, b) in u.snapshots.iter().zip(&v.snapshots) {
            for &i in grid.interior().iter().chain(grid.boundary()) {
                prop_assert!((b.eta[i] - a.eta[i] - c.ln()).abs() <= 1e-12 * (1.0 + a.eta[i].abs()));
            }
        }
    }
}
