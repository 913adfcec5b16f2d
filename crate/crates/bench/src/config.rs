//! Flat `key = value` benchmark configuration.
//!
//! One assignment per line, `#` starts a comment. Unknown keys, malformed
//! values and empty values are rejected with the offending line number.
//! Solver keys may be scoped to one solver as `<solver>.<key>`, e.g.
//! `ipiano.alpha = 1e-5`; scoped values win over global ones regardless of
//! line order.
//!
//! Global keys: `problem` (`simple_net` | `lasso`), `solvers` (alias
//! `solver`), `seeds` (`0,3,7` or the half-open range `0..10`),
//! `output_dir`, `emit_plot_data`, `figure_names`, `lambda`, `eps`,
//! `lasso_n`, `lasso_m`, `lasso_density`.
//!
//! Solver keys: `alpha`, `max_iters`, `time_budget`, `tol_residual`,
//! `a_margin`, `rho`, `beta_samples`, `backtracking`, `growth`,
//! `l_halving`, `direction_rank`, `ipiano_beta`, `theta0`,
//! `alternating_rounds`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use afista::solvers::SolverId;
use afista::SolverConfig;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    SimpleNet,
    Lasso,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::SimpleNet => "simple_net",
            ProblemKind::Lasso => "lasso",
        }
    }

    /// Prefix of the figure-style plot file names.
    pub fn plot_prefix(self) -> &'static str {
        match self {
            ProblemKind::SimpleNet => "SimpleSparseNet",
            ProblemKind::Lasso => "Lasso",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "simple_net" => Some(ProblemKind::SimpleNet),
            "lasso" => Some(ProblemKind::Lasso),
            _ => None,
        }
    }
}

/// Solver parameters that may be set globally or per solver. `None` keeps the
/// default (the network experiment's setup, or `0.95 / L` for the lasso step).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverSettings {
    pub alpha: Option<f64>,
    pub max_iters: Option<usize>,
    pub time_budget: Option<f64>,
    pub tol_residual: Option<f64>,
    pub a_margin: Option<f64>,
    pub rho: Option<f64>,
    pub beta_samples: Option<Vec<f64>>,
    pub backtracking: Option<bool>,
    pub growth: Option<f64>,
    pub l_halving: Option<bool>,
    pub direction_rank: Option<usize>,
    pub ipiano_beta: Option<f64>,
    pub theta0: Option<f64>,
    pub alternating_rounds: Option<usize>,
}

const SOLVER_KEYS: [&str; 14] = [
    "alpha",
    "max_iters",
    "time_budget",
    "tol_residual",
    "a_margin",
    "rho",
    "beta_samples",
    "backtracking",
    "growth",
    "l_halving",
    "direction_rank",
    "ipiano_beta",
    "theta0",
    "alternating_rounds",
];

fn num<T: FromStr>(value: &str, what: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("{what}: cannot parse '{value}'"))
}

fn real(value: &str, what: &str) -> std::result::Result<f64, String> {
    let v: f64 = num(value, what)?;
    if !v.is_finite() {
        return Err(format!("{what} must be finite"));
    }
    Ok(v)
}

fn flag(value: &str, what: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(format!("{what}: expected a boolean, got '{value}'")),
    }
}

fn positive(value: &str, what: &str) -> std::result::Result<f64, String> {
    let v = real(value, what)?;
    if v <= 0.0 {
        return Err(format!("{what} must be positive, got {v}"));
    }
    Ok(v)
}

fn unit_interval(value: &str, what: &str) -> std::result::Result<f64, String> {
    let v = real(value, what)?;
    if !(0.0..1.0).contains(&v) {
        return Err(format!("{what} must lie in [0, 1), got {v}"));
    }
    Ok(v)
}

fn real_list(value: &str, what: &str) -> std::result::Result<Vec<f64>, String> {
    value.split(',').map(|s| real(s.trim(), what)).collect()
}

impl SolverSettings {
    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "alpha" => self.alpha = Some(positive(value, key)?),
            "max_iters" => self.max_iters = Some(num(value, key)?),
            "time_budget" => self.time_budget = Some(positive(value, key)?),
            "tol_residual" => {
                let v = real(value, key)?;
                if v < 0.0 {
                    return Err(format!("tol_residual must be >= 0, got {v}"));
                }
                self.tol_residual = Some(v);
            }
            "a_margin" => self.a_margin = Some(positive(value, key)?),
            "rho" => self.rho = Some(unit_interval(value, key)?),
            "beta_samples" => {
                let v = real_list(value, key)?;
                if v.last() != Some(&0.0) {
                    return Err("beta_samples must end with 0".into());
                }
                self.beta_samples = Some(v);
            }
            "backtracking" => self.backtracking = Some(flag(value, key)?),
            "growth" => {
                let v = real(value, key)?;
                if v <= 1.0 {
                    return Err(format!("growth must exceed 1, got {v}"));
                }
                self.growth = Some(v);
            }
            "l_halving" => self.l_halving = Some(flag(value, key)?),
            "direction_rank" => {
                let v: usize = num(value, key)?;
                if v == 0 {
                    return Err("direction_rank must be at least 1".into());
                }
                self.direction_rank = Some(v);
            }
            "ipiano_beta" => self.ipiano_beta = Some(unit_interval(value, key)?),
            "theta0" => {
                let v = real(value, key)?;
                if !(v > 0.0 && v <= 1.0) {
                    return Err(format!("theta0 must lie in (0, 1], got {v}"));
                }
                self.theta0 = Some(v);
            }
            "alternating_rounds" => self.alternating_rounds = Some(num(value, key)?),
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Fields of `over` replace those of `self`.
    pub fn overlay(&self, over: &SolverSettings) -> SolverSettings {
        macro_rules! pick {
            ($($f:ident),*) => { SolverSettings { $($f: over.$f.clone().or_else(|| self.$f.clone())),* } };
        }
        pick!(
            alpha,
            max_iters,
            time_budget,
            tol_residual,
            a_margin,
            rho,
            beta_samples,
            backtracking,
            growth,
            l_halving,
            direction_rank,
            ipiano_beta,
            theta0,
            alternating_rounds
        )
    }

    /// Solver configuration with `default_alpha` used when no step is set.
    pub fn to_solver_config(&self, default_alpha: f64, seed: u64) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            time_budget: self.time_budget.unwrap_or(d.time_budget),
            step_alpha: self.alpha.unwrap_or(default_alpha),
            tol_residual: self.tol_residual.unwrap_or(d.tol_residual),
            a_margin: self.a_margin.unwrap_or(d.a_margin),
            rho: self.rho.unwrap_or(d.rho),
            beta_samples: self.beta_samples.clone().unwrap_or(d.beta_samples),
            seed,
            backtracking: self.backtracking.unwrap_or(d.backtracking),
            growth: self.growth.unwrap_or(d.growth),
            l_halving: self.l_halving.unwrap_or(d.l_halving),
            direction_rank: self.direction_rank.unwrap_or(d.direction_rank),
            ipiano_beta: self.ipiano_beta.unwrap_or(d.ipiano_beta),
            theta0: self.theta0.unwrap_or(d.theta0),
            alternating_rounds: self.alternating_rounds.unwrap_or(d.alternating_rounds),
            ..d
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoParams {
    pub n: usize,
    pub m: usize,
    pub density: f64,
}

impl Default for LassoParams {
    fn default() -> Self {
        Self { n: 200, m: 100, density: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub problem: ProblemKind,
    pub solvers: Vec<SolverId>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub emit_plot_data: bool,
    /// Name plot files `<Problem>_conv_<method>_iter.dat` after the problem and method.
    pub figure_names: bool,
    /// Weight of the l1 term; `None` means 1 for the network and 0.1 for the lasso.
    pub lambda: Option<f64>,
    pub eps: f64,
    pub lasso: LassoParams,
    pub settings: SolverSettings,
    pub per_solver: BTreeMap<SolverId, SolverSettings>,
}

/// The methods compared in the network experiment.
pub const DEFAULT_SOLVERS: [SolverId; 5] =
    [SolverId::Afista, SolverId::MmAfista, SolverId::Fbs, SolverId::Ipiano, SolverId::Mfista];

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::SimpleNet,
            solvers: DEFAULT_SOLVERS.to_vec(),
            seeds: (0..10).collect(),
            output_dir: PathBuf::from("bench_out"),
            emit_plot_data: true,
            figure_names: false,
            lambda: None,
            eps: 0.1,
            lasso: LassoParams::default(),
            settings: SolverSettings::default(),
            per_solver: BTreeMap::new(),
        }
    }
}

impl BenchConfig {
    /// Settings for one solver: global values overlaid with its scoped ones.
    pub fn settings_for(&self, id: SolverId) -> SolverSettings {
        match self.per_solver.get(&id) {
            Some(s) => self.settings.overlay(s),
            None => self.settings.clone(),
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or(match self.problem {
            ProblemKind::SimpleNet => 1.0,
            ProblemKind::Lasso => 0.1,
        })
    }
}

fn parse_solvers(value: &str) -> std::result::Result<Vec<SolverId>, String> {
    let mut out = Vec::new();
    for name in value.split(',').map(str::trim) {
        let id = SolverId::parse(name).ok_or_else(|| format!("unknown solver '{name}'"))?;
        if !out.contains(&id) {
            out.push(id);
        }
    }
    Ok(out)
}

fn parse_seeds(value: &str) -> std::result::Result<Vec<u64>, String> {
    if let Some((a, b)) = value.split_once("..") {
        let a: u64 = num(a.trim(), "seeds")?;
        let b: u64 = num(b.trim(), "seeds")?;
        if b <= a {
            return Err(format!("empty seed range {value}"));
        }
        return Ok((a..b).collect());
    }
    value.split(',').map(|s| num(s.trim(), "seeds")).collect()
}

/// Parses the flat format; an empty text yields [`BenchConfig::default`].
pub fn parse_config(text: &str) -> Result<BenchConfig> {
    let mut cfg = BenchConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |msg: String| BenchError::Config { line, msg };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| err(format!("expected 'key = value', got '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(err(format!("missing value for '{key}'")));
        }
        if let Some((scope, sub)) = key.split_once('.') {
            let id = SolverId::parse(scope).ok_or_else(|| err(format!("unknown solver '{scope}'")))?;
            if !SOLVER_KEYS.contains(&sub) {
                return Err(err(format!("unknown key '{sub}' for solver '{scope}'")));
            }
            cfg.per_solver.entry(id).or_default().set(sub, value).map_err(err)?;
            continue;
        }
        match key {
            "problem" => {
                cfg.problem = ProblemKind::parse(value).ok_or_else(|| err(format!("unknown problem '{value}'")))?;
            }
            "solvers" | "solver" => cfg.solvers = parse_solvers(value).map_err(err)?,
            "seeds" => cfg.seeds = parse_seeds(value).map_err(err)?,
            "output_dir" => cfg.output_dir = PathBuf::from(value),
            "emit_plot_data" => cfg.emit_plot_data = flag(value, key).map_err(err)?,
            "figure_names" => cfg.figure_names = flag(value, key).map_err(err)?,
            "lambda" => {
                let v = real(value, key).map_err(err)?;
                if v < 0.0 {
                    return Err(err(format!("lambda must be >= 0, got {v}")));
                }
                cfg.lambda = Some(v);
            }
            "eps" => cfg.eps = positive(value, key).map_err(err)?,
            "lasso_n" => cfg.lasso.n = num::<usize>(value, key).map_err(err)?.max(1),
            "lasso_m" => cfg.lasso.m = num::<usize>(value, key).map_err(err)?.max(1),
            "lasso_density" => {
                let v = real(value, key).map_err(err)?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(err(format!("lasso_density must lie in [0, 1], got {v}")));
                }
                cfg.lasso.density = v;
            }
            k if SOLVER_KEYS.contains(&k) => cfg.settings.set(k, value).map_err(err)?,
            _ => return Err(err(format!("unknown key '{key}'"))),
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_default() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, BenchConfig::default());
        let sc = cfg.settings_for(SolverId::Afista).to_solver_config(5e-5, 0);
        assert_eq!(sc.step_alpha, 5e-5);
        assert_eq!(sc.beta_samples, vec![2.0, 1.0, 0.0]);
        assert_eq!(sc.ipiano_beta, 0.95);
        assert_eq!(cfg.lambda(), 1.0);
        assert_eq!(cfg.eps, 0.1);
    }

    #[test]
    fn scoped_overrides_win() {
        let cfg = parse_config("ipiano.alpha = 1e-5\nalpha = 2e-5\n").unwrap();
        assert_eq!(cfg.settings_for(SolverId::Ipiano).alpha, Some(1e-5));
        assert_eq!(cfg.settings_for(SolverId::Fbs).alpha, Some(2e-5));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("# comment\n\nfoo = 1\n").unwrap_err();
        assert!(matches!(e, BenchError::Config { line: 3, .. }), "{e}");
        let e = parse_config("alpha = -1").unwrap_err();
        assert!(matches!(e, BenchError::Config { line: 1, .. }));
        assert!(parse_config("problem =").is_err());
        assert!(parse_config("max_iters = ten").is_err());
        assert!(parse_config("solver = nope").is_err());
        assert!(parse_config("afista.bogus = 1").is_err());
    }

    #[test]
    fn seeds_and_solvers() {
        let cfg = parse_config("solver = afista\nseeds = 3..6 # trailing").unwrap();
        assert_eq!(cfg.solvers, vec![SolverId::Afista]);
        assert_eq!(cfg.seeds, vec![3, 4, 5]);
        let cfg = parse_config("seeds = 1, 9").unwrap();
        assert_eq!(cfg.seeds, vec![1, 9]);
    }
}
