//! Two-column `.dat` tables for the objective-versus-iteration and
//! objective-versus-time panels.

use std::fmt::Write as _;
use std::fs;

use crate::config::BenchConfig;
use crate::error::{BenchError, Result};
use crate::runner::RunOutcome;

/// Base name of the plot files of one run (without `_iter.dat` / `_time.dat`).
pub fn plot_stem(cfg: &BenchConfig, o: &RunOutcome) -> String {
    if cfg.figure_names {
        let mut stem = format!("{}_conv_{}", cfg.problem.plot_prefix(), o.solver.plot_name());
        if cfg.seeds.len() > 1 {
            let _ = write!(stem, "_seed{}", o.seed);
        }
        stem
    } else {
        format!("{}_{}", o.solver.as_str(), o.seed)
    }
}

/// `(k, normalized objective)` rows, initial point included.
pub fn iter_table(o: &RunOutcome) -> String {
    let mut out = String::new();
    for r in &o.run.trace {
        let _ = writeln!(out, "{} {}", r.iter, r.normalized_objective);
    }
    out
}

/// `(seconds, normalized objective)` rows.
pub fn time_table(o: &RunOutcome) -> String {
    let mut out = String::new();
    for r in &o.run.trace {
        let _ = writeln!(out, "{:.6} {}", r.wall_time, r.normalized_objective);
    }
    out
}

pub fn emit_plot_data(cfg: &BenchConfig, outcomes: &[RunOutcome]) -> Result<()> {
    for o in outcomes {
        let stem = plot_stem(cfg, o);
        for (suffix, text) in [("iter", iter_table(o)), ("time", time_table(o))] {
            let path = cfg.output_dir.join(format!("{stem}_{suffix}.dat"));
            fs::write(&path, text).map_err(|e| BenchError::io(&path, e))?;
        }
    }
    Ok(())
}
