//! Benchmark harness: configuration, parallel runs, CSV traces, plot tables
//! and the numerical acceptance checks.

pub mod checks;
pub mod config;
pub mod error;
pub mod plot;
pub mod runner;

pub use config::{parse_config, BenchConfig, ProblemKind};
pub use error::{BenchError, Result};
pub use runner::{run_benchmark, RunOutcome};
