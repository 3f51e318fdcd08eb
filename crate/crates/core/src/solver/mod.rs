//! Explicit solver for the log-transformed equation on masked grids.
//!
//! Unknowns are `η = log u`, so `u = e^η > 0` at every node by
//! construction and scaling the datum by `c` shifts `η` by `log c`.

pub mod convergence;
pub mod export;
pub mod grid;
pub mod reports;
pub mod scheme;

pub use convergence::{convergence_study, ConvergenceReport, ConvergenceRow, ConvergenceSpec, ExactSolution};
pub use export::{write_orders_csv, write_snapshots_csv, ResidualStats, RunManifest};
pub use grid::{Grid, GridSummary, Lattice, NodeKind};
pub use reports::{
    barrier_sandwich_report, comparison_report, max_principle_report, self_convergence_tol, ComparisonReport,
    MaxPrincipleReport, SandwichReport,
};
pub use scheme::{cfl_dt, discrete_kp, initial_field, max_discrete_gradient, solve, step, GridField, SolveConfig, SolveStats, Trajectory};
