//! The extrapolated proximal gradient (EPG) step
//! `min_x min_beta  l(x; y_beta) + 1/2 |x - y_beta|_T^2`, `y_beta = x_base + D beta`,
//! where `l(x; y) = g(x) + f(y) + <grad f(y), x - y>`.
//!
//! Directions `D` are passed as a list of columns.

use crate::dense::{Cholesky, Square};
use crate::error::{Error, Result};
use crate::metric::{build_q_rank_r, DiagonalMetric, HessianOnSpan, LowRankMetric, Metric};
use crate::problem::{QuadraticProblem, SmoothObjective};
use crate::prox::{g_value, prox_diag, prox_metric, NonsmoothSpec};
use crate::vector::{check_len, dot, norm_inf};

const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    ClosedForm,
    Alternating,
    Backtracked,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EPGResult {
    pub x_next: Vec<f64>,
    pub beta: Vec<f64>,
    pub y: Vec<f64>,
    pub model_value: f64,
    pub l_used: f64,
    pub n_beta_trials: usize,
    pub n_l_backtracks: usize,
    pub mode: StepMode,
}

/// `x + D beta`.
pub fn extrapolate(x: &[f64], d: &[Vec<f64>], beta: &[f64]) -> Result<Vec<f64>> {
    check_len(d.len(), beta.len())?;
    let mut y = x.to_vec();
    for (col, b) in d.iter().zip(beta) {
        check_len(x.len(), col.len())?;
        if *b != 0.0 {
            for (yi, ci) in y.iter_mut().zip(col) {
                *yi += b * ci;
            }
        }
    }
    Ok(y)
}

/// `l(x; y) + 1/2 |x - y|_T^2` from precomputed `f(y)` and `grad f(y)`.
pub fn model_value_at(g: &NonsmoothSpec, t: &DiagonalMetric, x: &[f64], y: &[f64], fy: f64, grad_y: &[f64]) -> f64 {
    let gx = g_value(g, x);
    if gx == f64::INFINITY {
        return gx;
    }
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    gx + fy + dot(grad_y, &diff) + 0.5 * t.norm_sq(&diff)
}

pub fn model_value(f: &dyn SmoothObjective, g: &NonsmoothSpec, t: &DiagonalMetric, x: &[f64], y: &[f64]) -> f64 {
    let (fy, gy) = f.value_grad(y);
    model_value_at(g, t, x, y, fy, &gy)
}

/// `prox_diag(g, T, y - T^-1 grad)`, the shared forward-backward step.
pub fn prox_grad_step(g: &NonsmoothSpec, t: &DiagonalMetric, y: &[f64], grad_y: &[f64]) -> Vec<f64> {
    let v: Vec<f64> = y.iter().zip(grad_y).zip(t.diag()).map(|((yi, gi), ti)| yi - gi / ti).collect();
    prox_diag(g, t, &v)
}

/// `(D^T M D)^-1 D^T M (x - x_base)` for a symmetric operator `M`.
pub fn beta_star(d: &[Vec<f64>], m: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], x_base: &[f64]) -> Result<Vec<f64>> {
    check_len(x.len(), x_base.len())?;
    let r = d.len();
    let md: Vec<Vec<f64>> = d.iter().map(|c| m(c)).collect();
    let mut gram = Square::zeros(r);
    for i in 0..r {
        for j in 0..r {
            gram.set(i, j, dot(&d[i], &md[j]));
        }
    }
    gram.symmetrize();
    let chol = Cholesky::factor(&gram, PIVOT_TOL).map_err(|_| Error::Singular(r))?;
    let diff: Vec<f64> = x.iter().zip(x_base).map(|(a, b)| a - b).collect();
    let rhs: Vec<f64> = md.iter().map(|c| dot(c, &diff)).collect();
    Ok(chol.solve(&rhs))
}

fn t_minus_h<'a>(t: &'a DiagonalMetric, q: &'a QuadraticProblem) -> impl Fn(&[f64]) -> Vec<f64> + 'a {
    move |v| {
        let hv = q.apply_hessian(v);
        t.apply(v).iter().zip(&hv).map(|(a, b)| a - b).collect()
    }
}

/// Output of the closed-form step together with the equivalent metric.
#[derive(Debug, Clone)]
pub struct ClosedFormStep {
    pub result: EPGResult,
    /// `Q` of the equivalent proximal quasi-Newton step.
    pub metric: LowRankMetric,
    /// Prox input `x_base - Q^-1 grad f(x_base)`.
    pub prox_input: Vec<f64>,
}

/// Exact joint minimizer for quadratic `f`: a prox step in the
/// "T minus rank R" metric, then `beta` recovered from the normal equations.
pub fn epg_step_closed_form(
    q: &QuadraticProblem,
    g: &NonsmoothSpec,
    t: &DiagonalMetric,
    d: &[Vec<f64>],
    x_base: &[f64],
) -> Result<ClosedFormStep> {
    check_len(q.dim(), x_base.len())?;
    let (fb, grad) = q.quad_value_grad(x_base);
    let y_cols: Vec<Vec<f64>> = d.iter().map(|c| q.apply_hessian(c)).collect();
    let metric = build_q_rank_r(t, &HessianOnSpan::new(d.to_vec(), y_cols)?)?;
    let step = metric.apply_inverse(&grad)?;
    let prox_input: Vec<f64> = x_base.iter().zip(&step).map(|(a, b)| a - b).collect();
    let x_next = prox_metric(g, &metric, &prox_input)?;
    let beta = if d.is_empty() { Vec::new() } else { beta_star(d, t_minus_h(t, q), &x_next, x_base)? };
    let y = extrapolate(x_base, d, &beta)?;
    let (fy, gy) = if beta.iter().all(|b| *b == 0.0) { (fb, grad) } else { q.quad_value_grad(&y) };
    let model = model_value_at(g, t, &x_next, &y, fy, &gy);
    Ok(ClosedFormStep {
        result: EPGResult {
            x_next,
            beta,
            y,
            model_value: model,
            l_used: t.max_entry(),
            n_beta_trials: 1,
            n_l_backtracks: 0,
            mode: StepMode::ClosedForm,
        },
        metric,
        prox_input,
    })
}

/// Alternating minimization starting from `beta = 0`.
pub fn epg_step_alternating(
    f: &dyn SmoothObjective,
    g: &NonsmoothSpec,
    t: &DiagonalMetric,
    d: &[Vec<f64>],
    x_base: &[f64],
    n_rounds: usize,
) -> Result<EPGResult> {
    epg_step_alternating_from(f, g, t, d, x_base, &vec![0.0; d.len()], n_rounds)
}

/// Alternating minimization: x-step (prox-gradient at `y_beta`), then
/// beta-step (exact for quadratic `f`, one safeguarded Newton step otherwise).
///
/// The returned triple pairs the last x-step with the beta that minimizes the
/// model for that `x`, so the reported model value never exceeds the one of the
/// last x-step.
pub fn epg_step_alternating_from(
    f: &dyn SmoothObjective,
    g: &NonsmoothSpec,
    t: &DiagonalMetric,
    d: &[Vec<f64>],
    x_base: &[f64],
    beta0: &[f64],
    n_rounds: usize,
) -> Result<EPGResult> {
    check_len(f.dim(), x_base.len())?;
    check_len(d.len(), beta0.len())?;
    let mut beta = beta0.to_vec();
    let mut y = extrapolate(x_base, d, &beta)?;
    let (mut fy, mut gy) = f.value_grad(&y);
    let mut x = prox_grad_step(g, t, &y, &gy);
    let mut model = model_value_at(g, t, &x, &y, fy, &gy);
    let mut trials = 1;
    if d.is_empty() {
        return Ok(EPGResult {
            x_next: x,
            beta,
            y,
            model_value: model,
            l_used: t.max_entry(),
            n_beta_trials: trials,
            n_l_backtracks: 0,
            mode: StepMode::Alternating,
        });
    }
    for round in 0..n_rounds.max(1) {
        // beta-step for fixed x
        if let Some((b, yb, fb, gb, mb)) = beta_update(f, g, t, d, x_base, &x, &beta, &y, model)? {
            beta = b;
            y = yb;
            fy = fb;
            gy = gb;
            model = mb;
        }
        if round + 1 == n_rounds.max(1) {
            break;
        }
        // x-step for fixed beta
        let x_new = prox_grad_step(g, t, &y, &gy);
        let m_new = model_value_at(g, t, &x_new, &y, fy, &gy);
        trials += 1;
        let stalled = model - m_new < 1e-12 * (1.0 + model.abs());
        if m_new <= model {
            x = x_new;
            model = m_new;
        }
        if stalled {
            // one last beta refresh for the kept x
            if let Some((b, yb, _, _, mb)) = beta_update(f, g, t, d, x_base, &x, &beta, &y, model)? {
                beta = b;
                y = yb;
                model = mb;
            }
            break;
        }
    }
    Ok(EPGResult {
        x_next: x,
        beta,
        y,
        model_value: model,
        l_used: t.max_entry(),
        n_beta_trials: trials,
        n_l_backtracks: 0,
        mode: StepMode::Alternating,
    })
}

type BetaUpdate = (Vec<f64>, Vec<f64>, f64, Vec<f64>, f64);

/// Minimizes the model in beta for fixed `x`; `None` when no improvement was found.
#[allow(clippy::too_many_arguments)]
fn beta_update(
    f: &dyn SmoothObjective,
    g: &NonsmoothSpec,
    t: &DiagonalMetric,
    d: &[Vec<f64>],
    x_base: &[f64],
    x: &[f64],
    beta: &[f64],
    y: &[f64],
    model: f64,
) -> Result<Option<BetaUpdate>> {
    let candidate = if let Some(q) = f.as_quadratic() {
        match beta_star(d, t_minus_h(t, q), x, x_base) {
            Ok(b) => b,
            Err(_) => return Ok(None),
        }
    } else {
        // Newton step on beta -> phi(beta), gradient D^T (H_y - T)(x - y),
        // curvature D^T (T - H_y) D
        let m_at_y = |v: &[f64]| -> Vec<f64> {
            let hv = f.hessvec(y, v);
            t.apply(v).iter().zip(&hv).map(|(a, b)| a - b).collect()
        };
        match beta_star(d, m_at_y, x, y) {
            Ok(step) => beta.iter().zip(&step).map(|(b, s)| b + s).collect(),
            Err(_) => return Ok(None),
        }
    };
    let mut step: Vec<f64> = candidate.iter().zip(beta).map(|(c, b)| c - b).collect();
    for _ in 0..30 {
        if norm_inf(&step) == 0.0 {
            return Ok(None);
        }
        let b: Vec<f64> = beta.iter().zip(&step).map(|(a, s)| a + s).collect();
        let yb = extrapolate(x_base, d, &b)?;
        let (fb, gb) = f.value_grad(&yb);
        let mb = model_value_at(g, t, x, &yb, fb, &gb);
        if mb <= model {
            return Ok(Some((b, yb, fb, gb, mb)));
        }
        if f.as_quadratic().is_some() && mb - model <= 1e-14 * (1.0 + model.abs()) {
            return Ok(None);
        }
        step.iter_mut().for_each(|s| *s *= 0.5);
    }
    Ok(None)
}

/// Inexact EPG step: tries each `beta` in `samples` in order and accepts the
/// first one whose model value does not exceed `f^g(x_base)`.
///
/// `fg_base` must be `g(x_base) + f(x_base)`. Should the `beta = 0` candidate
/// fail the test through rounding, `x_base` itself is returned, for which the
/// model equals `fg_base` exactly.
#[allow(clippy::too_many_arguments)]
pub fn backtrack_beta_with(
    f: &dyn SmoothObjective,
    g: &NonsmoothSpec,
    t: &DiagonalMetric,
    d: &[f64],
    x_base: &[f64],
    base: (f64, &[f64]),
    fg_base: f64,
    samples: &[f64],
) -> Result<EPGResult> {
    let mut always = |_: &Candidate| true;
    let out = backtrack_beta_filtered(f, g, t, d, x_base, base, fg_base, samples, &mut always)?;
    Ok(out.expect("unfiltered backtracking always accepts beta = 0"))
}

/// A trial of the beta backtracking with the oracle values at its `y`.
pub struct Candidate<'a> {
    pub x_next: &'a [f64],
    pub y: &'a [f64],
    pub fy: f64,
    pub grad_y: &'a [f64],
}

/// Like [`backtrack_beta_with`], with an extra acceptance test applied to each
/// candidate (e.g. a Lipschitz upper bound). Returns `None` when the
/// `beta = 0` candidate fails the extra test as well.
#[allow(clippy::too_many_arguments)]
pub fn backtrack_beta_filtered(
    f: &dyn SmoothObjective,
    g: &NonsmoothSpec,
    t: &DiagonalMetric,
    d: &[f64],
    x_base: &[f64],
    base: (f64, &[f64]),
    fg_base: f64,
    samples: &[f64],
    accept: &mut dyn FnMut(&Candidate) -> bool,
) -> Result<Option<EPGResult>> {
    check_len(x_base.len(), d.len())?;
    let (f_base, grad_base) = base;
    let result = |x: Vec<f64>, beta: f64, y: Vec<f64>, model: f64, trials: usize| EPGResult {
        x_next: x,
        beta: vec![beta],
        y,
        model_value: model,
        l_used: t.max_entry(),
        n_beta_trials: trials,
        n_l_backtracks: 0,
        mode: StepMode::Backtracked,
    };
    let plain = |trials: usize, beta: f64, accept: &mut dyn FnMut(&Candidate) -> bool| -> Option<EPGResult> {
        let x = prox_grad_step(g, t, x_base, grad_base);
        let model = model_value_at(g, t, &x, x_base, f_base, grad_base);
        let (x, model) = if model <= fg_base { (x, model) } else { (x_base.to_vec(), fg_base) };
        let cand = Candidate { x_next: &x, y: x_base, fy: f_base, grad_y: grad_base };
        if !accept(&cand) {
            return None;
        }
        Some(result(x, beta, x_base.to_vec(), model, trials))
    };
    if d.iter().all(|v| *v == 0.0) {
        return Ok(plain(1, samples.first().copied().unwrap_or(0.0), accept));
    }
    let mut trials = 0;
    for &b in samples {
        trials += 1;
        if b == 0.0 {
            return Ok(plain(trials, 0.0, accept));
        }
        let y: Vec<f64> = x_base.iter().zip(d).map(|(xi, di)| xi + b * di).collect();
        let (fy, gy) = f.value_grad(&y);
        let x = prox_grad_step(g, t, &y, &gy);
        let model = model_value_at(g, t, &x, &y, fy, &gy);
        if model <= fg_base && accept(&Candidate { x_next: &x, y: &y, fy, grad_y: &gy }) {
            return Ok(Some(result(x, b, y, model, trials)));
        }
    }
    Ok(plain(trials + 1, 0.0, accept))
}

/// [`backtrack_beta_with`] evaluating `f` and `g` at `x_base` itself.
pub fn backtrack_beta(
    f: &dyn SmoothObjective,
    g: &NonsmoothSpec,
    t: &DiagonalMetric,
    d: &[f64],
    x_base: &[f64],
    samples: &[f64],
) -> Result<EPGResult> {
    let (fb, gb) = f.value_grad(x_base);
    let fg = g_value(g, x_base) + fb;
    backtrack_beta_with(f, g, t, d, x_base, (fb, &gb), fg, samples)
}

/// `f(x) <= f(y) + <grad f(y), x - y> + L/2 |x - y|^2 + 1e-12 (1 + |f(y)|)`.
pub fn lipschitz_condition(fy: f64, grad_y: &[f64], fx: f64, y: &[f64], x: &[f64], l: f64) -> bool {
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let rhs = fy + dot(grad_y, &diff) + 0.5 * l * dot(&diff, &diff);
    fx <= rhs + 1e-12 * (1.0 + fy.abs())
}

/// Scalar-`L` check of the Lipschitz upper bound; on failure `L` grows by `growth`.
pub fn backtrack_lipschitz(f: &dyn SmoothObjective, y: &[f64], x_next: &[f64], l: f64, growth: f64) -> (bool, f64) {
    let (fy, gy) = f.value_grad(y);
    let fx = f.value(x_next);
    if lipschitz_condition(fy, &gy, fx, y, x_next, l) {
        (true, l)
    } else {
        (false, growth * l)
    }
}
