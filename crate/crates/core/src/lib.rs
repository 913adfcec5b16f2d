//! Composite optimization with adaptively optimized extrapolation.
//!
//! The crate solves problems of the form `min_x f(x) + g(x)` where `f` is
//! smooth (value and gradient oracle) and `g` is a proper lower
//! semi-continuous term with a cheap proximal mapping. The central step
//! jointly minimizes a linearized model over the next iterate `x` and the
//! extrapolation coefficients `beta` of `y = x_k + D beta`. For quadratic
//! `f` that joint step is a proximal step in an "identity minus rank R"
//! metric, which is the zero-memory SR1 quasi-Newton metric when `R = 1`.
//!
//! Module map:
//!
//! * [`vector`], [`layout`], [`rng`], [`config`], [`trace`]: shared vocabulary.
//! * [`metric`]: diagonal and low-rank metrics, `Q`/`Q^-1` construction.
//! * [`prox`]: proximal mappings in diagonal, rank-1 and general low-rank metrics.
//! * [`epg`]: the extrapolated proximal gradient step and its backtracking.
//! * [`problem`], [`network`]: lasso-type quadratics and the sparse network regression.
//! * [`solvers`]: full iterative methods and baselines.
//! * [`oracle`]: independent validation helpers (finite differences, scans, grids).

pub mod config;
pub mod dense;
pub mod epg;
pub mod error;
pub mod layout;
pub mod metric;
pub mod network;
pub mod oracle;
pub mod problem;
pub mod prox;
pub mod rng;
pub mod root;
pub mod solvers;
pub mod trace;
pub mod vector;

pub use config::SolverConfig;
pub use error::{Error, Result};
pub use layout::{BlockLayout, BlockSpec, Matrix};
pub use metric::{DiagonalMetric, HessianOnSpan, LowRankMetric, Sign};
pub use problem::{QuadraticProblem, SmoothObjective};
pub use prox::{NonsmoothKind, NonsmoothSpec};
pub use rng::Rng;
pub use trace::{SolverRun, Status, TraceRecord};
pub use vector::ParamVector;
