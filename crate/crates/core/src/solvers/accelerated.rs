//! Accelerated hybrids that embed the joint extrapolation step into a
//! FISTA-type scheme and keep the O(1/k^2) guarantee for convex problems.

use super::{forward, prepare, probe_residual, residual_from_input, theta_sequence, Point, MAX_BACKTRACKS};
use crate::config::SolverConfig;
use crate::epg::{epg_step_alternating, epg_step_alternating_from, epg_step_closed_form, lipschitz_condition, model_value_at, prox_grad_step};
use crate::error::{Error, Result};
use crate::metric::DiagonalMetric;
use crate::problem::SmoothObjective;
use crate::prox::{prox_diag, NonsmoothSpec};
use crate::trace::{Recorder, SolverRun};
use crate::vector::dot;

fn require_convex(f: &dyn SmoothObjective, g: &NonsmoothSpec) -> Result<()> {
    if !f.is_convex() || !g.is_convex() {
        return Err(Error::Precondition("accelerated variants need convex f and g".into()));
    }
    Ok(())
}

/// Global `L`: configured, known to the problem, or found by backtracking a
/// plain step from `x0` and then frozen.
fn global_lipschitz(f: &dyn SmoothObjective, g: &NonsmoothSpec, x0: &Point, cfg: &SolverConfig) -> Result<f64> {
    if let Some(l) = cfg.lipschitz.or_else(|| f.lipschitz()) {
        return Ok(l);
    }
    let n = x0.x.len();
    let mut l = 1.0 / cfg.step_alpha;
    for _ in 0..MAX_BACKTRACKS {
        let tm = DiagonalMetric::scalar(n, l);
        let x = prox_diag(g, &tm, &forward(&x0.x, &x0.grad, &tm));
        if lipschitz_condition(x0.f, &x0.grad, f.value(&x), &x0.x, &x, l) {
            return Ok(l);
        }
        l *= cfg.growth;
    }
    Err(Error::Precondition("could not estimate a Lipschitz constant".into()))
}

/// `theta_k^2 / (1 - theta_k) * (L/2 |x0 - x*|^2 + (1 - theta_0)/theta_0 (F(x0) - F*))`.
fn rate_bound(k: usize, theta0: f64, l: f64, dist_sq: f64, gap0: f64) -> f64 {
    let th = theta_sequence(k, theta0);
    if th >= 1.0 {
        return f64::INFINITY;
    }
    th * th / (1.0 - th) * (0.5 * l * dist_sq + (1.0 - theta0) / theta0 * gap0)
}

fn bound_constants(cfg: &SolverConfig, x0: &Point) -> Option<(f64, f64)> {
    cfg.reference.as_ref().map(|r| {
        let d: Vec<f64> = x0.x.iter().zip(&r.x_star).map(|(a, b)| a - b).collect();
        (dot(&d, &d), x0.fg - r.f_star)
    })
}

/// The joint step from `base` along `d` with `T = L I`; for `d = 0` a plain step.
fn joint_step(
    f: &dyn SmoothObjective,
    g: &NonsmoothSpec,
    tm: &DiagonalMetric,
    base: &Point,
    d: &[f64],
    rounds: usize,
    beta0: f64,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    if d.iter().all(|v| *v == 0.0) {
        let x = prox_grad_step(g, tm, &base.x, &base.grad);
        let m = model_value_at(g, tm, &x, &base.x, base.f, &base.grad);
        return Ok((x, base.x.clone(), m));
    }
    let dirs = [d.to_vec()];
    if let Some(q) = f.as_quadratic() {
        if let Ok(step) = epg_step_closed_form(q, g, tm, &dirs, &base.x) {
            let r = step.result;
            return Ok((r.x_next, r.y, r.model_value));
        }
    }
    let r = if beta0 == 0.0 {
        epg_step_alternating(f, g, tm, &dirs, &base.x, rounds)?
    } else {
        epg_step_alternating_from(f, g, tm, &dirs, &base.x, &[beta0], rounds)?
    };
    Ok((r.x_next, r.y, r.model_value))
}

/// Monotone hybrid: an auxiliary accelerated sequence `x_hat` and the joint
/// step from `z_k` along `z_k - z_{k-1}`; `z_{k+1}` is the better of the two.
///
/// With a reference minimizer in the config, `rate_bounds` holds the
/// per-iteration certificate for `F(z_k) - F*`.
pub fn solve_adaptive_monotone_fista(
    f: &dyn SmoothObjective,
    g: &NonsmoothSpec,
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<SolverRun> {
    prepare(f, x0, cfg)?;
    require_convex(f, g)?;
    let n = x0.len();
    let mut z = Point::eval(f, g, x0.to_vec(), 0)?;
    let l = global_lipschitz(f, g, &z, cfg)?;
    let tm = DiagonalMetric::scalar(n, l);
    let consts = bound_constants(cfg, &z);
    let mut bounds = Vec::new();
    let mut z_prev = z.x.clone();
    let mut x_hat = z.x.clone();
    let mut rec = Recorder::new(cfg.max_iters, cfg.time_budget, cfg.tol_residual);
    rec.push(z.fg, probe_residual(f, g, &z, l), l, 0, vec![]);
    if let Some((dist, gap)) = consts {
        bounds.push(rate_bound(0, cfg.theta0, l, dist, gap));
    }
    let status = loop {
        if let Some(s) = rec.should_stop() {
            break s;
        }
        let k = rec.iter();
        let th = theta_sequence(k, cfg.theta0);
        let th_prev = if k == 0 { cfg.theta0 } else { theta_sequence(k - 1, cfg.theta0) };
        let c_mom = th * (1.0 - th_prev) / th_prev;
        let c_hat = th / th_prev;
        let y_hat: Vec<f64> = (0..n).map(|i| z.x[i] + c_mom * (z.x[i] - z_prev[i]) + c_hat * (x_hat[i] - z.x[i])).collect();
        let gy = f.gradient(&y_hat);
        let v_hat = forward(&y_hat, &gy, &tm);
        let p_hat = Point::eval(f, g, prox_diag(g, &tm, &v_hat), k + 1)?;
        let d: Vec<f64> = z.x.iter().zip(&z_prev).map(|(a, b)| a - b).collect();
        let (x_plus, _, _) = joint_step(f, g, &tm, &z, &d, cfg.alternating_rounds, 0.0)?;
        let p_plus = Point::eval(f, g, x_plus, k + 1)?;
        let plus_wins = p_plus.fg <= p_hat.fg;
        x_hat = p_hat.x.clone();
        let (next, residual) = if plus_wins {
            let r = probe_residual(f, g, &p_plus, l);
            (p_plus, r)
        } else {
            let r = residual_from_input(&p_hat.grad, &p_hat.x, &v_hat, &tm);
            (p_hat, r)
        };
        z_prev = std::mem::replace(&mut z, next).x;
        rec.push(z.fg, residual, l, 0, vec![if plus_wins { 1.0 } else { 0.0 }]);
        if let Some((dist, gap)) = consts {
            bounds.push(rate_bound(k + 1, cfg.theta0, l, dist, gap));
        }
    };
    let mut run = rec.finish("adaptive_monotone", z.x, status);
    run.rate_bounds = consts.map(|_| bounds);
    Ok(run)
}

/// Tseng-type hybrid: `y = (1-theta) x+_k + theta x_hat_k`, an auxiliary
/// step for `x_hat` with weight `theta L`, and the joint step from `x+_k`
/// along `x_hat_k - x+_k`, which contains `y` at `beta = theta`.
///
/// The model inequality against `z = (1-theta) x+_k + theta x_hat_{k+1}` is
/// checked every iteration; a violation is an internal error.
pub fn solve_adaptive_tseng(f: &dyn SmoothObjective, g: &NonsmoothSpec, x0: &[f64], cfg: &SolverConfig) -> Result<SolverRun> {
    prepare(f, x0, cfg)?;
    require_convex(f, g)?;
    let n = x0.len();
    let mut xp = Point::eval(f, g, x0.to_vec(), 0)?;
    let l = global_lipschitz(f, g, &xp, cfg)?;
    let tm = DiagonalMetric::scalar(n, l);
    let consts = bound_constants(cfg, &xp);
    let mut bounds = Vec::new();
    let mut x_hat = xp.x.clone();
    let mut rec = Recorder::new(cfg.max_iters, cfg.time_budget, cfg.tol_residual);
    rec.push(xp.fg, probe_residual(f, g, &xp, l), l, 0, vec![]);
    if let Some((dist, gap)) = consts {
        bounds.push(rate_bound(0, cfg.theta0, l, dist, gap));
    }
    let status = loop {
        if let Some(s) = rec.should_stop() {
            break s;
        }
        let k = rec.iter();
        let th = theta_sequence(k, cfg.theta0);
        let y_hat: Vec<f64> = xp.x.iter().zip(&x_hat).map(|(a, b)| (1.0 - th) * a + th * b).collect();
        let (fy, gy) = f.value_grad(&y_hat);
        let t_hat = DiagonalMetric::scalar(n, th * l);
        let x_hat_next = prox_diag(g, &t_hat, &forward(&x_hat, &gy, &t_hat));
        let z: Vec<f64> = xp.x.iter().zip(&x_hat_next).map(|(a, b)| (1.0 - th) * a + th * b).collect();
        let rhs = model_value_at(g, &tm, &z, &y_hat, fy, &gy);
        // beta = theta candidate: the plain step at y_hat
        let v_a = forward(&y_hat, &gy, &tm);
        let x_a = prox_diag(g, &tm, &v_a);
        let m_a = model_value_at(g, &tm, &x_a, &y_hat, fy, &gy);
        let d: Vec<f64> = x_hat.iter().zip(&xp.x).map(|(a, b)| a - b).collect();
        let (x_b, _, m_b) = joint_step(f, g, &tm, &xp, &d, cfg.alternating_rounds, th)?;
        let (x_new, model, joint) = if m_b < m_a { (x_b, m_b, true) } else { (x_a, m_a, false) };
        if !(model <= rhs + 1e-10 * (1.0 + rhs.abs())) {
            return Err(Error::Internal {
                iter: k + 1,
                msg: format!("selection model {model} exceeds the comparison value {rhs}"),
            });
        }
        let next = Point::eval(f, g, x_new, k + 1)?;
        let residual = if joint { probe_residual(f, g, &next, l) } else { residual_from_input(&next.grad, &next.x, &v_a, &tm) };
        x_hat = x_hat_next;
        xp = next;
        rec.push(xp.fg, residual, l, 0, vec![if joint { 1.0 } else { 0.0 }]);
        if let Some((dist, gap)) = consts {
            bounds.push(rate_bound(k + 1, cfg.theta0, l, dist, gap));
        }
    };
    let mut run = rec.finish("adaptive_tseng", xp.x, status);
    run.rate_bounds = consts.map(|_| bounds);
    Ok(run)
}
