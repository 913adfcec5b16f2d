//! Runs every (solver, seed) pair of a [`BenchConfig`] and writes the traces.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use afista::network::{generate_data, init_params, sparsity_level, NetworkProblem, NetworkSpec};
use afista::problem::make_random_lasso;
use afista::solvers::{solve, SolverId};
use afista::{BlockLayout, BlockSpec, NonsmoothSpec, SmoothObjective, SolverRun};
use rayon::prelude::*;

use crate::config::{BenchConfig, ProblemKind};
use crate::error::{BenchError, Result};
use crate::plot::emit_plot_data;

/// Coordinates with `|x_i|` at most this count as zero in the summary.
pub const SPARSITY_TOL: f64 = 1e-10;

pub const CSV_HEADER: &str = "iter,time_seconds,objective,normalized_objective,stationarity_residual,l_value,n_backtracks";

/// A concrete problem: smooth part, regularizer, start point and the layout
/// whose regularized blocks define sparsity.
pub struct Instance {
    pub f: Box<dyn SmoothObjective>,
    pub g: NonsmoothSpec,
    pub x0: Vec<f64>,
    pub layout: BlockLayout,
    /// Step used when the config sets none.
    pub default_alpha: f64,
}

pub fn build_instance(cfg: &BenchConfig, seed: u64) -> Result<Instance> {
    match cfg.problem {
        ProblemKind::SimpleNet => {
            let spec = NetworkSpec::new([1, 10, 10, 1], cfg.eps, cfg.lambda());
            let g = spec.regularizer();
            let x0 = init_params(&spec, seed);
            let layout = spec.layout.clone();
            let f = NetworkProblem::new(spec, generate_data(seed));
            Ok(Instance { f: Box::new(f), g, x0, layout, default_alpha: afista::SolverConfig::default().step_alpha })
        }
        ProblemKind::Lasso => {
            let p = &cfg.lasso;
            let (q, g) = make_random_lasso(seed, p.n, p.m, p.density, cfg.lambda())?;
            let default_alpha = 0.95 / q.l_max();
            let layout = BlockLayout::new(vec![BlockSpec::new("x", p.n, 1, true)]);
            Ok(Instance { f: Box::new(q), g, x0: vec![0.0; p.n], layout, default_alpha })
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub solver: SolverId,
    pub seed: u64,
    pub run: SolverRun,
    pub sparsity: f64,
}

/// One pair, without touching the file system.
pub fn run_one(cfg: &BenchConfig, solver: SolverId, seed: u64) -> Result<RunOutcome> {
    let inst = build_instance(cfg, seed)?;
    let sc = cfg.settings_for(solver).to_solver_config(inst.default_alpha, seed);
    let run = solve(solver, inst.f.as_ref(), &inst.g, &inst.x0, &sc)
        .map_err(|source| BenchError::Solver { solver: solver.as_str().into(), seed, source })?;
    let sparsity = sparsity_level(&run.final_x, &inst.layout, SPARSITY_TOL);
    Ok(RunOutcome { solver, seed, run, sparsity })
}

pub fn trace_csv(run: &SolverRun) -> String {
    let mut out = String::with_capacity(64 * (run.trace.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &run.trace {
        let _ = writeln!(
            out,
            "{},{:.6},{},{},{},{},{}",
            r.iter, r.wall_time, r.objective, r.normalized_objective, r.stationarity_residual, r.l_value, r.n_backtracks
        );
    }
    out
}

pub fn csv_name(solver: SolverId, seed: u64) -> String {
    format!("{}_{}.csv", solver.as_str(), seed)
}

pub fn summary_csv(outcomes: &[RunOutcome]) -> String {
    let mut out = String::from("solver,seed,iterations,status,final_objective,final_normalized_objective,sparsity\n");
    for o in outcomes {
        let last = o.run.trace.last();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            o.solver.as_str(),
            o.seed,
            last.map_or(0, |r| r.iter),
            o.run.status.as_str(),
            o.run.final_objective(),
            last.map_or(f64::NAN, |r| r.normalized_objective),
            o.sparsity
        );
    }
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| BenchError::io(path, e))
}

/// Runs all pairs in parallel, writes one CSV per run, optional plot data and
/// `summary.csv`. Outcomes are returned in (solver, seed) config order.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<Vec<RunOutcome>> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let pairs: Vec<(SolverId, u64)> =
        cfg.solvers.iter().flat_map(|&s| cfg.seeds.iter().map(move |&seed| (s, seed))).collect();
    let outcomes = pairs
        .par_iter()
        .map(|&(solver, seed)| {
            let o = run_one(cfg, solver, seed)?;
            write(&dir.join(csv_name(solver, seed)), &trace_csv(&o.run))?;
            Ok(o)
        })
        .collect::<Result<Vec<_>>>()?;
    if cfg.emit_plot_data {
        emit_plot_data(cfg, &outcomes)?;
    }
    write(&dir.join("summary.csv"), &summary_csv(&outcomes))?;
    Ok(outcomes)
}

/// Monotone methods whose trace increases beyond `1e-12` relative slack.
pub fn audit(outcomes: &[RunOutcome]) -> Vec<String> {
    outcomes
        .iter()
        .filter(|o| o.solver.is_monotone())
        .filter_map(|o| {
            let v = o.run.monotonicity_violations(1e-12);
            (!v.is_empty()).then(|| format!("{} seed {}: objective increased at iterations {:?}", o.solver.as_str(), o.seed, v))
        })
        .collect()
}

/// Drops the time column so that traces of repeated runs compare equal.
pub fn mask_time_column(csv: &str) -> String {
    csv.lines()
        .map(|l| {
            let mut cols: Vec<&str> = l.split(',').collect();
            if cols.len() > 1 {
                cols.remove(1);
            }
            cols.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}
