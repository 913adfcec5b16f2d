use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use afista::solvers::SolverId;
use afista_bench::checks::{self, Check};
use afista_bench::{parse_config, run_benchmark, BenchError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bench", about = "Benchmark runner for the adaptive-extrapolation solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (solver, seed) pair of a config and write CSV traces.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run this single seed instead of the configured list.
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated solver ids.
        #[arg(long)]
        solvers: Option<String>,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Compare the network gradient with central differences.
    Gradcheck {
        #[arg(long, default_value = "simple_net")]
        problem: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one group of numerical oracle checks.
    Oracle {
        #[arg(long, value_parser = ["theorem1", "rank1prox", "rates"])]
        suite: String,
    },
}

const OK: u8 = 0;
const FAILED: u8 = 1;
const CONFIG_ERROR: u8 = 2;

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(CONFIG_ERROR)
}

fn run(config: Option<PathBuf>, out: Option<PathBuf>, seed: Option<u64>, solvers: Option<String>, max_iters: Option<usize>) -> ExitCode {
    let text = match &config {
        Some(p) => match fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => return config_error(format!("{}: {e}", p.display())),
        },
        None => String::new(),
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    if let Some(out) = out {
        cfg.output_dir = out;
    }
    if let Some(seed) = seed {
        cfg.seeds = vec![seed];
    }
    if let Some(list) = solvers {
        let mut ids = Vec::new();
        for name in list.split(',').map(str::trim) {
            match SolverId::parse(name) {
                Some(id) => ids.push(id),
                None => return config_error(format!("unknown solver '{name}'")),
            }
        }
        cfg.solvers = ids;
    }
    if let Some(n) = max_iters {
        cfg.settings.max_iters = Some(n);
        cfg.per_solver.values_mut().for_each(|s| s.max_iters = None);
    }
    match run_benchmark(&cfg) {
        Ok(outcomes) => {
            for o in &outcomes {
                println!(
                    "{:<18} seed {:<4} objective {:<14.8e} sparsity {:.3} ({})",
                    o.solver.as_str(),
                    o.seed,
                    o.run.final_objective(),
                    o.sparsity,
                    o.run.status.as_str()
                );
            }
            let problems = afista_bench::runner::audit(&outcomes);
            for p in &problems {
                eprintln!("FAIL {p}");
            }
            println!("wrote {} runs to {}", outcomes.len(), cfg.output_dir.display());
            ExitCode::from(if problems.is_empty() { OK } else { FAILED })
        }
        Err(e @ BenchError::Config { .. }) => config_error(e),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(FAILED)
        }
    }
}

fn report(checks: &[Check]) -> ExitCode {
    for c in checks {
        println!("{}", c.line());
    }
    ExitCode::from(if checks.iter().all(|c| c.passed) { OK } else { FAILED })
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out, seed, solvers, max_iters } => run(config, out, seed, solvers, max_iters),
        Command::Gradcheck { problem, seed } => {
            if problem != "simple_net" {
                return config_error(format!("gradcheck supports only simple_net, got '{problem}'"));
            }
            let (err, _) = checks::gradient_correctness(&[seed]);
            let passed = err <= 1e-5;
            println!("{} seed {seed}: max relative error {err:.3e} over 20 coordinates (<= 1e-5)", if passed { "PASS" } else { "FAIL" });
            ExitCode::from(if passed { OK } else { FAILED })
        }
        Command::Oracle { suite } => match checks::suite(&suite) {
            Some(c) => report(&c),
            None => config_error(format!("unknown suite '{suite}'")),
        },
    }
}
