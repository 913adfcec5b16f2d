//! Forward-backward splitting, iPiano and monotone FISTA.

use super::{forward, plain_step, prepare, probe_residual, residual_from_input, theta_sequence, Point};
use crate::config::SolverConfig;
use crate::epg::lipschitz_condition;
use crate::error::Result;
use crate::metric::DiagonalMetric;
use crate::problem::SmoothObjective;
use crate::prox::{prox_diag, NonsmoothSpec};
use crate::trace::{Recorder, SolverRun};

/// `x+ = prox_diag(g, alpha^-1 I, x - alpha grad f(x))`, with optional
/// backtracking that also enforces monotone objective values.
pub fn solve_fbs(f: &dyn SmoothObjective, g: &NonsmoothSpec, x0: &[f64], cfg: &SolverConfig) -> Result<SolverRun> {
    prepare(f, x0, cfg)?;
    let mut t = 1.0 / cfg.step_alpha;
    let mut cur = Point::eval(f, g, x0.to_vec(), 0)?;
    let mut rec = Recorder::new(cfg.max_iters, cfg.time_budget, cfg.tol_residual);
    rec.push(cur.fg, probe_residual(f, g, &cur, t), t, 0, vec![]);
    let status = loop {
        if let Some(s) = rec.should_stop() {
            break s;
        }
        let k = rec.iter() + 1;
        let step = plain_step(f, g, &cur, t, cfg, Some(cur.fg), &cur, k)?;
        t = step.t;
        let residual = if step.moved {
            residual_from_input(&step.p.grad, &step.p.x, &step.v, &DiagonalMetric::scalar(x0.len(), t))
        } else {
            probe_residual(f, g, &step.p, t)
        };
        cur = step.p;
        rec.push(cur.fg, residual, t, step.n_bt, vec![]);
    };
    Ok(rec.finish("fbs", cur.x, status))
}

/// Inertial forward-backward:
/// `x+ = prox_diag(g, T, x - T^-1 grad f(x) + beta (x - x_prev))`, fixed step, `x_{-1} = x_0`.
pub fn solve_ipiano(f: &dyn SmoothObjective, g: &NonsmoothSpec, x0: &[f64], cfg: &SolverConfig) -> Result<SolverRun> {
    prepare(f, x0, cfg)?;
    let n = x0.len();
    let t = 1.0 / cfg.step_alpha;
    let tm = DiagonalMetric::scalar(n, t);
    let beta = cfg.ipiano_beta;
    let mut cur = Point::eval(f, g, x0.to_vec(), 0)?;
    let mut prev = x0.to_vec();
    let mut rec = Recorder::new(cfg.max_iters, cfg.time_budget, cfg.tol_residual);
    rec.push(cur.fg, probe_residual(f, g, &cur, t), t, 0, vec![]);
    let status = loop {
        if let Some(s) = rec.should_stop() {
            break s;
        }
        let k = rec.iter() + 1;
        let mut v = forward(&cur.x, &cur.grad, &tm);
        for ((vi, xi), pi) in v.iter_mut().zip(&cur.x).zip(&prev) {
            *vi += beta * (xi - pi);
        }
        let next = Point::eval(f, g, prox_diag(g, &tm, &v), k)?;
        let residual = residual_from_input(&next.grad, &next.x, &v, &tm);
        prev = std::mem::replace(&mut cur, next).x;
        rec.push(cur.fg, residual, t, 0, vec![beta]);
    };
    Ok(rec.finish("ipiano", cur.x, status))
}

/// FISTA extrapolation `y = x_k + beta_k (x_k - x_{k-1})`,
/// `beta_k = theta_k (1/theta_{k-1} - 1)`, `theta_k = 2/(k+2)`, with monotone
/// selection: the extrapolated candidate is kept only if it does not increase
/// the objective, otherwise the plain step from `x_k` is taken.
pub fn solve_mfista(f: &dyn SmoothObjective, g: &NonsmoothSpec, x0: &[f64], cfg: &SolverConfig) -> Result<SolverRun> {
    prepare(f, x0, cfg)?;
    let n = x0.len();
    let mut t = 1.0 / cfg.step_alpha;
    let mut cur = Point::eval(f, g, x0.to_vec(), 0)?;
    let mut prev = x0.to_vec();
    let mut rec = Recorder::new(cfg.max_iters, cfg.time_budget, cfg.tol_residual);
    rec.push(cur.fg, probe_residual(f, g, &cur, t), t, 0, vec![]);
    let status = loop {
        if let Some(s) = rec.should_stop() {
            break s;
        }
        let k = rec.iter();
        let theta = theta_sequence(k, 1.0);
        let theta_prev = if k == 0 { 1.0 } else { theta_sequence(k - 1, 1.0) };
        let beta = theta * (1.0 / theta_prev - 1.0);
        let mut n_bt = 0;
        let mut accepted = None;
        if beta != 0.0 && cur.x != prev {
            let y: Vec<f64> = cur.x.iter().zip(&prev).map(|(a, b)| a + beta * (a - b)).collect();
            let py = Point::eval(f, g, y, k + 1)?;
            // the extrapolated point may be infeasible for g; the step itself is still defined
            let step = extrapolated_step(f, g, &py, t, cfg, k + 1)?;
            n_bt += step.2;
            t = step.1;
            if let Some((p, v)) = step.0 {
                if p.fg <= cur.fg {
                    accepted = Some((p, v, beta));
                }
            }
        }
        let (next, residual, beta_used) = match accepted {
            Some((p, v, b)) => {
                let r = residual_from_input(&p.grad, &p.x, &v, &DiagonalMetric::scalar(n, t));
                (p, r, b)
            }
            None => {
                let step = plain_step(f, g, &cur, t, cfg, Some(cur.fg), &cur, k + 1)?;
                t = step.t;
                n_bt += step.n_bt;
                let r = if step.moved {
                    residual_from_input(&step.p.grad, &step.p.x, &step.v, &DiagonalMetric::scalar(n, t))
                } else {
                    probe_residual(f, g, &step.p, t)
                };
                (step.p, r, 0.0)
            }
        };
        prev = std::mem::replace(&mut cur, next).x;
        rec.push(cur.fg, residual, t, n_bt, vec![beta_used]);
    };
    Ok(rec.finish("mfista", cur.x, status))
}

type Candidate = (Option<(Point, Vec<f64>)>, f64, usize);

/// Backtracked forward-backward step at an extrapolated point, without any
/// monotonicity requirement; `None` if backtracking gives up.
fn extrapolated_step(
    f: &dyn SmoothObjective,
    g: &NonsmoothSpec,
    y: &Point,
    t0: f64,
    cfg: &SolverConfig,
    iter: usize,
) -> Result<Candidate> {
    let n = y.x.len();
    let mut t = t0;
    for n_bt in 0..=super::MAX_BACKTRACKS {
        let tm = DiagonalMetric::scalar(n, t);
        let v = forward(&y.x, &y.grad, &tm);
        let p = Point::eval(f, g, prox_diag(g, &tm, &v), iter)?;
        if !cfg.backtracking || lipschitz_condition(y.f, &y.grad, p.f, &y.x, &p.x, t) {
            return Ok((Some((p, v)), t, n_bt));
        }
        t *= cfg.growth;
    }
    Ok((None, t, super::MAX_BACKTRACKS))
}
