//! Adaptive extrapolation with Lipschitz backtracking.

use super::{forward, prepare, probe_residual, residual_from_input, Point, MAX_BACKTRACKS};
use crate::config::SolverConfig;
use crate::epg::{backtrack_beta_filtered, epg_step_alternating, epg_step_closed_form, lipschitz_condition, Candidate};
use crate::error::Result;
use crate::metric::{DiagonalMetric, HessianOnSpan};
use crate::problem::{QuadraticProblem, SmoothObjective};
use crate::prox::{prox_diag, NonsmoothSpec};
use crate::trace::{Recorder, SolverRun};

/// A trial iterate together with the extrapolated point it was computed from.
struct Trial {
    p: Point,
    y: Vec<f64>,
    fy: f64,
    gy: Vec<f64>,
    beta: Vec<f64>,
    residual: f64,
    extra_trials: usize,
    /// Already passed the upper-bound and descent tests.
    checked: bool,
}

fn plain_trial(f: &dyn SmoothObjective, g: &NonsmoothSpec, tm: &DiagonalMetric, cur: &Point, k: usize) -> Result<Trial> {
    let v = forward(&cur.x, &cur.grad, tm);
    let p = Point::eval(f, g, prox_diag(g, tm, &v), k)?;
    let residual = residual_from_input(&p.grad, &p.x, &v, tm);
    Ok(Trial { p, y: cur.x.clone(), fy: cur.f, gy: cur.grad.clone(), beta: vec![0.0], residual, extra_trials: 0, checked: false })
}

#[allow(clippy::too_many_arguments)]
fn trial(
    f: &dyn SmoothObjective,
    g: &NonsmoothSpec,
    quad: Option<&QuadraticProblem>,
    tm: &DiagonalMetric,
    dirs: &[Vec<f64>],
    cur: &Point,
    cfg: &SolverConfig,
    k: usize,
) -> Result<Option<Trial>> {
    if dirs.is_empty() {
        return plain_trial(f, g, tm, cur, k).map(Some);
    }
    if let Some(q) = quad {
        let Ok(step) = epg_step_closed_form(q, g, tm, dirs, &cur.x) else {
            return plain_trial(f, g, tm, cur, k).map(Some);
        };
        let r = step.result;
        let p = Point::eval(f, g, r.x_next, k)?;
        let residual = residual_from_input(&p.grad, &p.x, &step.prox_input, &step.metric);
        let (fy, gy) = if r.y == cur.x { (cur.f, cur.grad.clone()) } else { q.quad_value_grad(&r.y) };
        return Ok(Some(Trial { p, y: r.y, fy, gy, beta: r.beta, residual, extra_trials: 0, checked: false }));
    }
    if dirs.len() == 1 {
        let mut accept = |_: &Candidate| true;
        let base = (cur.f, cur.grad.as_slice());
        let filtered = backtrack_beta_filtered(f, g, tm, &dirs[0], &cur.x, base, cur.fg, &cfg.beta_samples, &mut accept)?;
        let Some(r) = filtered else {
            return Ok(None);
        };
        let (fy, gy) = if r.y == cur.x { (cur.f, cur.grad.clone()) } else { f.value_grad(&r.y) };
        let v = forward(&r.y, &gy, tm);
        let moved = r.x_next != cur.x || r.model_value < cur.fg;
        let p = Point::eval(f, g, r.x_next, k)?;
        let residual = if moved { residual_from_input(&p.grad, &p.x, &v, tm) } else { probe_residual(f, g, &p, tm.diag()[0]) };
        let extra_trials = r.n_beta_trials - 1;
        return Ok(Some(Trial { p, y: r.y, fy, gy, beta: r.beta, residual, extra_trials, checked: false }));
    }
    let r = epg_step_alternating(f, g, tm, dirs, &cur.x, cfg.alternating_rounds)?;
    let (fy, gy) = f.value_grad(&r.y);
    let p = Point::eval(f, g, r.x_next, k)?;
    let residual = probe_residual(f, g, &p, tm.diag()[0]);
    Ok(Some(Trial { p, y: r.y, fy, gy, beta: r.beta, residual, extra_trials: 0, checked: false }))
}

/// Algorithm with the joint (x, beta) step over `D = [x_k - x_{k-1}, ...]`.
///
/// Quadratic `f` (and `closed_form` set): exact joint step through the
/// equivalent low-rank metric. Otherwise: beta backtracking over
/// `beta_samples` for one direction, alternating minimization for more.
/// With backtracking, `T = (1 + a) L` grows by `growth` until the upper bound
/// with `L` holds at `y` and the objective has not increased.
pub fn solve_afista(f: &dyn SmoothObjective, g: &NonsmoothSpec, x0: &[f64], cfg: &SolverConfig) -> Result<SolverRun> {
    prepare(f, x0, cfg)?;
    let n = x0.len();
    let quad = if cfg.closed_form { f.as_quadratic() } else { None };
    let margin = 1.0 + cfg.a_margin;
    let mut t = 1.0 / cfg.step_alpha;
    let mut cur = Point::eval(f, g, x0.to_vec(), 0)?;
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    let mut rec = Recorder::new(cfg.max_iters, cfg.time_budget, cfg.tol_residual);
    rec.push(cur.fg, probe_residual(f, g, &cur, t), t / margin, 0, vec![]);
    let status = loop {
        if let Some(s) = rec.should_stop() {
            break s;
        }
        let k = rec.iter() + 1;
        if cfg.l_halving {
            t *= 0.5;
        }
        let mut n_bt = 0;
        let accepted = loop {
            let tm = DiagonalMetric::scalar(n, t);
            let tr = trial(f, g, quad, &tm, &dirs, &cur, cfg, k)?;
            if let Some(mut tr) = tr {
                n_bt += tr.extra_trials;
                if !cfg.backtracking {
                    if quad.is_some() && tr.p.fg > cur.fg {
                        tr = plain_trial(f, g, &tm, &cur, k)?;
                    }
                    break Some(tr);
                }
                let upper = tr.checked || lipschitz_condition(tr.fy, &tr.gy, tr.p.f, &tr.y, &tr.p.x, t / margin);
                if upper && tr.p.fg <= cur.fg {
                    break Some(tr);
                }
            }
            if n_bt >= MAX_BACKTRACKS {
                break None;
            }
            t *= cfg.growth;
            n_bt += 1;
        };
        let (next, residual, beta) = match accepted {
            Some(tr) => (tr.p, tr.residual, tr.beta),
            None => {
                let r = probe_residual(f, g, &cur, t);
                (cur.clone(), r, vec![0.0])
            }
        };
        update_directions(&mut dirs, &next.x, &cur.x, cfg.direction_rank);
        cur = next;
        rec.push(cur.fg, residual, t / margin, n_bt, beta);
    };
    Ok(rec.finish("afista", cur.x, status))
}

/// Keeps the last `rank` nonzero, linearly independent differences, newest first.
fn update_directions(dirs: &mut Vec<Vec<f64>>, next: &[f64], cur: &[f64], rank: usize) {
    let diff: Vec<f64> = next.iter().zip(cur).map(|(a, b)| a - b).collect();
    if diff.iter().all(|v| *v == 0.0) {
        dirs.clear();
        return;
    }
    dirs.insert(0, diff);
    dirs.truncate(rank);
    while dirs.len() > 1 {
        let span = HessianOnSpan { d: dirs.clone(), y: dirs.clone() };
        if span.columns_independent() {
            break;
        }
        dirs.pop();
    }
}
