//! JSON-configured batch runs behind the command-line front end.
//!
//! Every command writes `report.json` (deterministic for a fixed config and
//! seed) and `timing.json` (wall-clock only) into the output directory,
//! plus command-specific artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::barriers::Family;
use crate::calculus::Exponents;
use crate::domain::SpatialDomain;
use crate::error::{invalid, Error, Result};
use crate::expr::DataExpression;
use crate::problem::{BoundaryDatum, CylinderProblem};
use crate::solver::{
    convergence_study, max_principle_report, solve, write_orders_csv, write_snapshots_csv, ConvergenceSpec, Grid, Lattice,
    RunManifest, SolveConfig,
};
use crate::suite::Suite;
use crate::verify::{sweep, SweepConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Verify,
    Solve,
    Converge,
    Suite,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Solve => "solve",
            Command::Converge => "converge",
            Command::Suite => "suite",
        }
    }
}

/// Data as expressions in `x1..xn` and `t`: either one `h` for the whole
/// parabolic boundary, or `f` (initial) with an optional side part `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<DataExpression>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<DataExpression>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<DataExpression>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub domain: SpatialDomain,
    pub horizon: f64,
    pub p: f64,
    pub datum: DatumConfig,
}

impl ProblemConfig {
    pub fn build(&self) -> Result<CylinderProblem> {
        let n = self.domain.dim();
        let e = Exponents::new(self.p, n)?;
        let (f, g) = match (&self.datum.h, &self.datum.f, &self.datum.g) {
            (Some(h), None, None) => (h.clone(), None),
            (None, Some(f), g) => (f.clone(), g.clone()),
            _ => return Err(invalid("datum needs either `h` alone or `f` with an optional `g`")),
        };
        for expr in std::iter::once(&f).chain(g.as_ref()) {
            let used = expr.tree().dimension_used();
            if used > n {
                return Err(invalid(format!("expression `{expr}` reads x{used} but the domain has n = {n}")));
            }
        }
        let datum = BoundaryDatum::from_expressions(f, g);
        CylinderProblem::new(self.domain.clone(), self.horizon, e, datum)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierRequest {
    pub family: Family,
    pub anchor: Vec<f64>,
    /// Anchor time; ignored by the initial-time families.
    #[serde(default)]
    pub s: f64,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Cells per axis of the bounding box.
    pub cells: Vec<usize>,
    #[serde(default = "default_lattice")]
    pub lattice: Lattice,
    #[serde(default)]
    pub config: SolveConfig,
    /// Allowed excess of interior extrema over boundary extrema.
    #[serde(default = "default_mp_tol")]
    pub max_principle_tol: f64,
}

fn default_lattice() -> Lattice {
    Lattice::Vertex
}

fn default_mp_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "benchmark", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvergenceSection {
    Heat {
        #[serde(default = "default_heat_dim")]
        n: usize,
    },
    PlaneWave,
    Custom {
        spec: Box<ConvergenceSpec>,
    },
}

fn default_heat_dim() -> usize {
    2
}

impl ConvergenceSection {
    pub fn spec(&self) -> Result<ConvergenceSpec> {
        match self {
            ConvergenceSection::Heat { n } => ConvergenceSpec::heat(*n),
            ConvergenceSection::PlaneWave => ConvergenceSpec::plane_wave(),
            ConvergenceSection::Custom { spec } => Ok((**spec).clone()),
        }
    }
}

/// The JSON config file. Sections not used by a command are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub barriers: Vec<BarrierRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceSection>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
    }

    /// SHA-256 of the canonical JSON of the parsed config.
    pub fn hash(&self) -> Result<String> {
        Ok(hex_digest(serde_json::to_string(self)?.as_bytes()))
    }

    fn problem(&self) -> Result<CylinderProblem> {
        self.problem.as_ref().ok_or_else(|| invalid("config has no `problem` section"))?.build()
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultEntry {
    pub name: String,
    pub pass: bool,
    pub metrics: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub results: Vec<ResultEntry>,
    pub failures: Vec<String>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.failures.is_empty() && self.results.iter().all(|r| r.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass() {
            0
        } else {
            1
        }
    }
}

/// Outcome of [`run`]: the report plus per-result wall-clock seconds.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Report,
    pub timing: Vec<(String, f64)>,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Runs `command`, writing artifacts into `out`. `config` is required for
/// all commands but `suite`.
pub fn run(command: Command, config: Option<&RunConfig>, out: &Path) -> Result<Outcome> {
    let started = Instant::now();
    let need = || config.ok_or_else(|| invalid(format!("`{}` needs --config", command.name())));
    let (results, timing, hash, seed) = match command {
        Command::Verify => {
            let cfg = need()?;
            let (r, t) = run_verify(cfg, out)?;
            (r, t, cfg.hash()?, cfg.seed)
        }
        Command::Solve => {
            let cfg = need()?;
            let (r, t) = run_solve(cfg, out)?;
            (r, t, cfg.hash()?, cfg.seed)
        }
        Command::Converge => {
            let cfg = need()?;
            let (r, t) = run_converge(cfg, out)?;
            (r, t, cfg.hash()?, cfg.seed)
        }
        Command::Suite => {
            let seed = config.map_or(0, |c| c.seed);
            let (r, t) = run_suite(seed)?;
            (r, t, hex_digest(format!("suite:{seed}").as_bytes()), seed)
        }
    };
    let failures = results.iter().filter(|r| !r.pass).map(|r| r.name.clone()).collect();
    let report = Report { command: command.name().into(), config_hash: hash, seed, results, failures };
    fs::create_dir_all(out)?;
    write_json(&out.join("report.json"), &report)?;
    let mut timing = timing;
    timing.push(("total".into(), started.elapsed().as_secs_f64()));
    let timing_json: serde_json::Map<String, Value> = timing.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    write_json(&out.join("timing.json"), &timing_json)?;
    Ok(Outcome { report, timing })
}

type Results = (Vec<ResultEntry>, Vec<(String, f64)>);

fn run_verify(cfg: &RunConfig, out: &Path) -> Result<Results> {
    if cfg.barriers.is_empty() {
        return Err(invalid("`verify` needs at least one entry in `barriers`"));
    }
    let prob = cfg.problem()?;
    let sweep_cfg = SweepConfig { seed: cfg.seed, ..cfg.sweep.unwrap_or_default() };
    let mut results = Vec::new();
    let mut timing = Vec::new();
    let mut barriers = Vec::new();
    for req in &cfg.barriers {
        let started = Instant::now();
        let b = req.family.construct(&prob, &req.anchor, req.s, req.eps)?;
        let rep = sweep(&b, &prob, &sweep_cfg);
        let name = format!("{}@{:?},{}", req.family.name(), req.anchor, req.s);
        results.push(ResultEntry {
            name: name.clone(),
            pass: rep.pass,
            metrics: json!({
                "worst_margin": rep.worst_margin(),
                "failed_items": rep.failures(),
                "pieces": rep.pieces,
                "ridge": rep.ridge,
                "ordering": rep.ordering,
                "continuity": rep.continuity,
                "constraints": rep.constraints,
            }),
        });
        barriers.push(serde_json::to_value(&b)?);
        timing.push((name, started.elapsed().as_secs_f64()));
    }
    fs::create_dir_all(out)?;
    write_json(&out.join("barriers.json"), &barriers)?;
    Ok((results, timing))
}

fn run_solve(cfg: &RunConfig, out: &Path) -> Result<Results> {
    let prob = cfg.problem()?;
    let section = cfg.solver.as_ref().ok_or_else(|| invalid("config has no `solver` section"))?;
    let started = Instant::now();
    let grid = Arc::new(Grid::new(prob.domain(), &section.cells, section.lattice)?);
    let traj = solve(&prob, grid, &section.config)?;
    let seconds = started.elapsed().as_secs_f64();
    fs::create_dir_all(out)?;
    write_snapshots_csv(&traj, fs::File::create(out.join("snapshots.csv"))?)?;
    RunManifest::new(&traj, &section.config)?.write(&out.join("manifest.json"))?;
    let mp = max_principle_report(&traj, &prob, section.max_principle_tol);
    let min_u = traj.snapshots.iter().map(|f| f.interior_extrema().1).fold(f64::INFINITY, f64::min);
    let results = vec![
        ResultEntry {
            name: "positivity".into(),
            pass: min_u > 0.0,
            metrics: json!({ "min_interior_u": min_u, "steps": traj.stats.steps }),
        },
        ResultEntry { name: "max_principle".into(), pass: mp.pass, metrics: serde_json::to_value(&mp)? },
    ];
    Ok((results, vec![("solve".into(), seconds)]))
}

fn run_converge(cfg: &RunConfig, out: &Path) -> Result<Results> {
    let section = cfg.convergence.as_ref().ok_or_else(|| invalid("config has no `convergence` section"))?;
    let spec = section.spec()?;
    let rep = convergence_study(&spec)?;
    fs::create_dir_all(out)?;
    write_orders_csv(&rep, fs::File::create(out.join("orders.csv"))?)?;
    let orders = rep.orders();
    let pass = rep.errors_decrease() && orders.iter().all(|&o| o > 0.0);
    let timing = rep.rows.iter().map(|r| (format!("h={}", r.h), r.seconds)).collect();
    let rows: Vec<Value> = rep
        .rows
        .iter()
        .map(|r| json!({ "cells": r.cells, "h": r.h, "error": r.error, "order": r.order, "steps": r.steps, "excess_constant": r.excess_constant }))
        .collect();
    Ok((vec![ResultEntry { name: "convergence".into(), pass, metrics: json!({ "rows": rows, "orders": orders }) }], timing))
}

fn run_suite(seed: u64) -> Result<Results> {
    let suite = Suite::new(seed);
    let mut results = Vec::new();
    let mut timing = Vec::new();
    for t in suite.run_all() {
        let name = format!("criterion_{}", t.result.id);
        let mut metrics = serde_json::to_value(&t.result.metrics)?;
        if let Value::Object(m) = &mut metrics {
            m.insert("failures".into(), json!(t.result.failures));
            m.insert("budget_seconds".into(), json!(t.budget_seconds));
        }
        // Runtime budgets are judged from timing.json, never from the report.
        results.push(ResultEntry { name: name.clone(), pass: t.result.pass, metrics });
        timing.push((name, t.seconds));
    }
    Ok((results, timing))
}

/// JSON body written for a failed run.
pub fn error_json(err: &Error) -> Value {
    json!({ "error": err.kind(), "message": err.to_string(), "exit_code": err.exit_code() })
}

/// Writes `error.json` into `out` when possible and returns the exit code.
pub fn report_error(err: &Error, out: Option<&PathBuf>) -> i32 {
    let body = error_json(err);
    if let Some(dir) = out {
        let _ = fs::create_dir_all(dir).and_then(|_| fs::write(dir.join("error.json"), body.to_string() + "\n"));
    }
    eprintln!("{body}");
    err.exit_code()
}
