//! Per-iteration measurements and the result of a solver run.

use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub wall_time: f64,
    pub objective: f64,
    pub normalized_objective: f64,
    pub stationarity_residual: f64,
    pub l_value: f64,
    pub n_backtracks: usize,
    pub beta_used: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    IterBudget,
    TimeBudget,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::IterBudget => "iter_budget",
            Status::TimeBudget => "time_budget",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverRun {
    pub solver_id: String,
    pub trace: Vec<TraceRecord>,
    pub final_x: Vec<f64>,
    pub status: Status,
    /// Accelerated-rate bound per trace record, when a reference minimizer was supplied.
    pub rate_bounds: Option<Vec<f64>>,
}

impl SolverRun {
    pub fn final_objective(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.objective)
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.objective).collect()
    }

    /// Indices `k` where `F(x_{k+1}) > F(x_k) + slack * (1 + |F(x_k)|)`.
    pub fn monotonicity_violations(&self, slack: f64) -> Vec<usize> {
        self.trace
            .windows(2)
            .filter(|w| w[1].objective > w[0].objective + slack * (1.0 + w[0].objective.abs()))
            .map(|w| w[0].iter)
            .collect()
    }
}

/// Accumulates trace records and decides when to stop.
pub(crate) struct Recorder {
    start: Instant,
    first_objective: Option<f64>,
    pub trace: Vec<TraceRecord>,
    max_iters: usize,
    time_budget: f64,
    tol_residual: f64,
}

impl Recorder {
    pub fn new(max_iters: usize, time_budget: f64, tol_residual: f64) -> Self {
        Self {
            start: Instant::now(),
            first_objective: None,
            trace: Vec::with_capacity(max_iters.min(1 << 16) + 1),
            max_iters,
            time_budget,
            tol_residual,
        }
    }

    pub fn push(
        &mut self,
        objective: f64,
        residual: f64,
        l_value: f64,
        n_backtracks: usize,
        beta_used: Vec<f64>,
    ) {
        let first = *self.first_objective.get_or_insert(objective);
        let normalized = if first != 0.0 { objective / first } else { objective };
        self.trace.push(TraceRecord {
            iter: self.trace.len(),
            wall_time: self.start.elapsed().as_secs_f64(),
            objective,
            normalized_objective: normalized,
            stationarity_residual: residual,
            l_value,
            n_backtracks,
            beta_used,
        });
    }

    /// Stop status after the latest record, if any.
    pub fn should_stop(&self) -> Option<Status> {
        let last = self.trace.last()?;
        if last.iter > 0 && self.tol_residual > 0.0 && last.stationarity_residual <= self.tol_residual {
            return Some(Status::Converged);
        }
        if last.iter >= self.max_iters {
            return Some(Status::IterBudget);
        }
        if last.wall_time >= self.time_budget {
            return Some(Status::TimeBudget);
        }
        None
    }

    pub fn iter(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }

    pub fn finish(self, solver_id: &str, final_x: Vec<f64>, status: Status) -> SolverRun {
        SolverRun { solver_id: solver_id.to_string(), trace: self.trace, final_x, status, rate_bounds: None }
    }
}
