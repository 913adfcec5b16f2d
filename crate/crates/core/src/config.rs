//! Solver configuration shared by every algorithm in [`crate::solvers`].

use crate::error::{Error, Result};

/// Known minimizer used to evaluate the accelerated-rate certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub x_star: Vec<f64>,
    pub f_star: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Wall-clock budget in seconds; `f64::INFINITY` disables it.
    pub time_budget: f64,
    /// Step size `alpha`; the base metric is `T = alpha^-1 I`.
    pub step_alpha: f64,
    /// Stop once the stationarity residual drops to this value (0 disables).
    pub tol_residual: f64,
    /// Margin `a` in `T - L - a I >= 0`, relative to the scalar `L`.
    pub a_margin: f64,
    /// Damping of the rank-R correction in the MM variant, in `[0, 1)`.
    pub rho: f64,
    /// Extrapolation samples tried in order; must end with 0.
    pub beta_samples: Vec<f64>,
    pub seed: u64,
    /// Lipschitz backtracking on/off. When off, `T` stays at `alpha^-1`.
    pub backtracking: bool,
    /// Factor applied to `L` (and `T`) on a failed backtracking test.
    pub growth: f64,
    /// Halve `L` once at the start of every outer iteration.
    pub l_halving: bool,
    /// Number of extrapolation directions R (columns of D).
    pub direction_rank: usize,
    /// Inertia of iPiano.
    pub ipiano_beta: f64,
    /// `theta_0` of the accelerated variants.
    pub theta0: f64,
    /// Global Lipschitz constant for the accelerated variants; estimated when absent.
    pub lipschitz: Option<f64>,
    /// Alternating rounds for the joint step when `f` is not quadratic.
    pub alternating_rounds: usize,
    /// Use the closed-form joint step when `f` is quadratic.
    pub closed_form: bool,
    pub reference: Option<Reference>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            time_budget: f64::INFINITY,
            step_alpha: 5e-5,
            tol_residual: 0.0,
            a_margin: 1e-6,
            rho: 0.9,
            beta_samples: vec![2.0, 1.0, 0.0],
            seed: 0,
            backtracking: true,
            growth: 2.0,
            l_halving: false,
            direction_rank: 1,
            ipiano_beta: 0.95,
            theta0: 1.0,
            lipschitz: None,
            alternating_rounds: 20,
            closed_form: true,
            reference: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.step_alpha > 0.0 && self.step_alpha.is_finite()) {
            return bad(format!("step_alpha must be positive, got {}", self.step_alpha));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        if !(self.a_margin > 0.0) {
            return bad(format!("a_margin must be positive, got {}", self.a_margin));
        }
        if !(self.tol_residual >= 0.0) {
            return bad(format!("tol_residual must be >= 0, got {}", self.tol_residual));
        }
        if !(self.growth > 1.0) {
            return bad(format!("growth must exceed 1, got {}", self.growth));
        }
        if self.beta_samples.last() != Some(&0.0) {
            return bad("beta_samples must end with 0".into());
        }
        if self.beta_samples.iter().any(|b| !b.is_finite()) {
            return bad("beta_samples must be finite".into());
        }
        if !(0.0..1.0).contains(&self.ipiano_beta) {
            return bad(format!("ipiano_beta must lie in [0, 1), got {}", self.ipiano_beta));
        }
        if !(self.theta0 > 0.0 && self.theta0 <= 1.0) {
            return bad(format!("theta0 must lie in (0, 1], got {}", self.theta0));
        }
        if self.direction_rank == 0 {
            return bad("direction_rank must be at least 1".into());
        }
        if let Some(l) = self.lipschitz {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("lipschitz must be positive, got {l}"));
            }
        }
        if !(self.time_budget > 0.0) {
            return bad("time_budget must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SolverConfig::default().validate().unwrap();
    }

    #[test]
    fn guards() {
        let c = SolverConfig { step_alpha: -1.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = SolverConfig { rho: 1.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = SolverConfig { a_margin: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = SolverConfig { beta_samples: vec![2.0, 1.0], ..Default::default() };
        assert!(c.validate().is_err());
    }
}
