//! Iterative methods: the adaptive-extrapolation method and its MM variant,
//! two accelerated hybrids with O(1/k^2) certificates, and the baselines
//! FBS, iPiano and monotone FISTA.
//!
//! Every solver has the signature `(f, g, x0, config) -> SolverRun` and
//! records one trace entry for the starting point plus one per iteration.

mod accelerated;
mod afista;
mod baselines;
mod mm;

pub use accelerated::{solve_adaptive_monotone_fista, solve_adaptive_tseng};
pub use afista::solve_afista;
pub use baselines::{solve_fbs, solve_ipiano, solve_mfista};
pub use mm::{mm_step, solve_mm_afista, MmStep};

use crate::config::SolverConfig;
use crate::epg::lipschitz_condition;
use crate::error::{Error, Result};
use crate::metric::{DiagonalMetric, Metric};
use crate::problem::SmoothObjective;
use crate::prox::{g_value, prox_diag, NonsmoothSpec};
use crate::trace::SolverRun;
use crate::vector::{check_len, norm2};

/// Cap on consecutive backtracking trials within one iteration.
pub(crate) const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SolverId {
    Afista,
    MmAfista,
    AdaptiveMonotone,
    AdaptiveTseng,
    Fbs,
    Ipiano,
    Mfista,
}

impl SolverId {
    pub const ALL: [SolverId; 7] = [
        SolverId::Afista,
        SolverId::MmAfista,
        SolverId::AdaptiveMonotone,
        SolverId::AdaptiveTseng,
        SolverId::Fbs,
        SolverId::Ipiano,
        SolverId::Mfista,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SolverId::Afista => "afista",
            SolverId::MmAfista => "mm_afista",
            SolverId::AdaptiveMonotone => "adaptive_monotone",
            SolverId::AdaptiveTseng => "adaptive_tseng",
            SolverId::Fbs => "fbs",
            SolverId::Ipiano => "ipiano",
            SolverId::Mfista => "mfista",
        }
    }

    /// Name used in the figure data files.
    pub fn plot_name(self) -> &'static str {
        match self {
            SolverId::Afista => "aFISTA",
            SolverId::MmAfista => "zeroSR1_PG",
            SolverId::AdaptiveMonotone => "amFISTA",
            SolverId::AdaptiveTseng => "aTseng",
            SolverId::Fbs => "FBS",
            SolverId::Ipiano => "iPiano",
            SolverId::Mfista => "mFISTA",
        }
    }

    pub fn parse(s: &str) -> Option<SolverId> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "zerosr1" | "zerosr1_pg" => Some(SolverId::MmAfista),
            _ => SolverId::ALL.into_iter().find(|id| id.as_str() == s),
        }
    }

    /// Whether the objective sequence is guaranteed non-increasing.
    pub fn is_monotone(self) -> bool {
        !matches!(self, SolverId::Ipiano | SolverId::AdaptiveTseng)
    }

    /// Whether the method needs convex `f` and `g`.
    pub fn needs_convexity(self) -> bool {
        matches!(self, SolverId::AdaptiveMonotone | SolverId::AdaptiveTseng)
    }
}

pub fn solve(id: SolverId, f: &dyn SmoothObjective, g: &NonsmoothSpec, x0: &[f64], cfg: &SolverConfig) -> Result<SolverRun> {
    match id {
        SolverId::Afista => solve_afista(f, g, x0, cfg),
        SolverId::MmAfista => solve_mm_afista(f, g, x0, cfg),
        SolverId::AdaptiveMonotone => solve_adaptive_monotone_fista(f, g, x0, cfg),
        SolverId::AdaptiveTseng => solve_adaptive_tseng(f, g, x0, cfg),
        SolverId::Fbs => solve_fbs(f, g, x0, cfg),
        SolverId::Ipiano => solve_ipiano(f, g, x0, cfg),
        SolverId::Mfista => solve_mfista(f, g, x0, cfg),
    }
}

/// `theta_k = 2 / (k + 2 / theta_0)`, which is `2 / (k + 2)` for `theta_0 = 1`.
pub fn theta_sequence(k: usize, theta0: f64) -> f64 {
    2.0 / (k as f64 + 2.0 / theta0)
}

/// `|grad f(x_next) - grad f(y) - T (x_next - y)|`: the norm of an element of
/// the subdifferential of `f + g` at `x_next = prox_T(y - T^-1 grad f(y))`.
pub fn stationarity_residual(f: &dyn SmoothObjective, x_next: &[f64], y: &[f64], t: &DiagonalMetric) -> f64 {
    let gn = f.gradient(x_next);
    let gy = f.gradient(y);
    let tx = t.apply(&x_next.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>());
    let v: Vec<f64> = gn.iter().zip(&gy).zip(&tx).map(|((a, b), c)| a - b - c).collect();
    norm2(&v)
}

/// `|grad f(x_next) + Q (v - x_next)|` for `x_next = prox_Q(v)`; the same
/// subgradient element written in terms of the prox input.
pub fn residual_from_input(grad_next: &[f64], x_next: &[f64], v: &[f64], q: &dyn Metric) -> f64 {
    let qd = q.apply(&v.iter().zip(x_next).map(|(a, b)| a - b).collect::<Vec<_>>());
    norm2(&grad_next.iter().zip(&qd).map(|(a, b)| a + b).collect::<Vec<_>>())
}

/// `y - T^-1 grad`, the forward half of a proximal gradient step.
pub(crate) fn forward(y: &[f64], grad: &[f64], t: &DiagonalMetric) -> Vec<f64> {
    y.iter().zip(grad).zip(t.diag()).map(|((yi, gi), ti)| yi - gi / ti).collect()
}

/// A point with its oracle values.
#[derive(Debug, Clone)]
pub(crate) struct Point {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    /// `g(x) + f(x)`.
    pub fg: f64,
}

impl Point {
    pub fn eval(f: &dyn SmoothObjective, g: &NonsmoothSpec, x: Vec<f64>, iter: usize) -> Result<Point> {
        let (fx, grad) = f.value_grad(&x);
        if !fx.is_finite() || grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::Oracle { iter, msg: "non-finite value or gradient".into() });
        }
        let fg = g_value(g, &x) + fx;
        Ok(Point { x, f: fx, grad, fg })
    }
}

/// Forward-backward step from `y` in the scalar metric `t`.
pub(crate) struct PlainStep {
    pub p: Point,
    pub v: Vec<f64>,
    pub t: f64,
    pub n_bt: usize,
    pub moved: bool,
}

/// Forward-backward step from `y` with optional Lipschitz backtracking.
///
/// With backtracking the step is accepted once the upper bound with `L = t`
/// holds at `y` and, when `monotone_ref` is given, the objective does not
/// exceed it. After [`MAX_BACKTRACKS`] failures `fallback` is returned unchanged.
pub(crate) fn plain_step(
    f: &dyn SmoothObjective,
    g: &NonsmoothSpec,
    y: &Point,
    t0: f64,
    cfg: &SolverConfig,
    monotone_ref: Option<f64>,
    fallback: &Point,
    iter: usize,
) -> Result<PlainStep> {
    let n = y.x.len();
    let mut t = t0;
    let mut n_bt = 0;
    loop {
        let tm = DiagonalMetric::scalar(n, t);
        let v = forward(&y.x, &y.grad, &tm);
        let p = Point::eval(f, g, prox_diag(g, &tm, &v), iter)?;
        if !cfg.backtracking {
            return Ok(PlainStep { p, v, t, n_bt, moved: true });
        }
        let upper = lipschitz_condition(y.f, &y.grad, p.f, &y.x, &p.x, t);
        if upper && monotone_ref.is_none_or(|r| p.fg <= r) {
            return Ok(PlainStep { p, v, t, n_bt, moved: true });
        }
        if n_bt >= MAX_BACKTRACKS {
            let v = forward(&fallback.x, &fallback.grad, &tm);
            return Ok(PlainStep { p: fallback.clone(), v, t, n_bt, moved: false });
        }
        t *= cfg.growth;
        n_bt += 1;
    }
}

/// Residual of a plain forward-backward step from `p` with metric `t`; used
/// for the starting point and for iterations that did not move.
pub(crate) fn probe_residual(f: &dyn SmoothObjective, g: &NonsmoothSpec, p: &Point, t: f64) -> f64 {
    let tm = DiagonalMetric::scalar(p.x.len(), t);
    let v = forward(&p.x, &p.grad, &tm);
    let x = prox_diag(g, &tm, &v);
    residual_from_input(&f.gradient(&x), &x, &v, &tm)
}

pub(crate) fn prepare(f: &dyn SmoothObjective, x0: &[f64], cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    check_len(f.dim(), x0.len())?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("x0"));
    }
    Ok(())
}
