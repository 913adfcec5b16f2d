//! Majorization-minimization variant with the zero-memory SR1 metric.

use super::{prepare, probe_residual, residual_from_input, Point, MAX_BACKTRACKS};
use crate::config::SolverConfig;
use crate::epg::lipschitz_condition;
use crate::error::Result;
use crate::metric::{sr1_memory_metric, DiagonalMetric, LowRankMetric, Metric};
use crate::problem::SmoothObjective;
use crate::prox::{prox_metric, NonsmoothSpec};
use crate::trace::{Recorder, SolverRun};
use crate::vector::dot;

#[derive(Debug, Clone)]
pub struct MmStep {
    pub x_next: Vec<f64>,
    /// The metric actually used (falls back to `T` when the SR1 update is rejected).
    pub metric: LowRankMetric,
    pub prox_input: Vec<f64>,
}

/// One proximal quasi-Newton step `x+ = prox_Q(x - Q^-1 grad)` with
/// `Q = T - rho u u^T` from the secant pair `(d, y_diff)`.
///
/// Any failure along the way (rejected update, indefinite metric, unsupported
/// prox) degrades to the diagonal metric `T`.
pub fn mm_step(
    g: &NonsmoothSpec,
    t: &DiagonalMetric,
    x: &[f64],
    grad: &[f64],
    d: &[f64],
    y_diff: &[f64],
    rho: f64,
) -> Result<MmStep> {
    let mut q = sr1_memory_metric(t, d, y_diff);
    if !q.is_diagonal() {
        q = q.with_damping(rho);
    }
    if !q.is_positive_definite() {
        q = LowRankMetric::diagonal(t.clone());
    }
    let attempt = |q: &LowRankMetric| -> Result<(Vec<f64>, Vec<f64>)> {
        let step = q.apply_inverse(grad)?;
        let v: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a - b).collect();
        let xn = prox_metric(g, q, &v)?;
        Ok((xn, v))
    };
    match attempt(&q) {
        Ok((x_next, prox_input)) => Ok(MmStep { x_next, metric: q, prox_input }),
        Err(_) if !q.is_diagonal() => {
            let q = LowRankMetric::diagonal(t.clone());
            let (x_next, prox_input) = attempt(&q)?;
            Ok(MmStep { x_next, metric: q, prox_input })
        }
        Err(e) => Err(e),
    }
}

/// Each iteration minimizes `g` plus the quadratic model of `f` at `x_k` in the
/// metric `Q_k = T_k - rho u u^T` built from the last secant pair.
///
/// The step is accepted when the tangent upper bound with `L = T/(1+a)` holds
/// and `F(x+) <= F(x_k) - 1/2 |x+ - x_k|^2_{Q-L}` (and `F(x+) <= F(x_k)`);
/// a failed decrease test retries with the plain metric `T`, a failed upper
/// bound grows `T`.
pub fn solve_mm_afista(f: &dyn SmoothObjective, g: &NonsmoothSpec, x0: &[f64], cfg: &SolverConfig) -> Result<SolverRun> {
    prepare(f, x0, cfg)?;
    let n = x0.len();
    let margin = 1.0 + cfg.a_margin;
    let mut t = 1.0 / cfg.step_alpha;
    let mut cur = Point::eval(f, g, x0.to_vec(), 0)?;
    let mut secant: Option<(Vec<f64>, Vec<f64>)> = None;
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
        let mut plain_metric = secant.is_none();
        let accepted = loop {
            let tm = DiagonalMetric::scalar(n, t);
            let zero = vec![0.0; n];
            let (d, yd) = match (&secant, plain_metric) {
                (Some((d, yd)), false) => (d.as_slice(), yd.as_slice()),
                _ => (zero.as_slice(), zero.as_slice()),
            };
            let step = mm_step(g, &tm, &cur.x, &cur.grad, d, yd, cfg.rho)?;
            let p = Point::eval(f, g, step.x_next.clone(), k)?;
            if !cfg.backtracking {
                break Some((p, step));
            }
            let l = t / margin;
            if !lipschitz_condition(cur.f, &cur.grad, p.f, &cur.x, &p.x, l) {
                if n_bt >= MAX_BACKTRACKS {
                    break None;
                }
                t *= cfg.growth;
                n_bt += 1;
                continue;
            }
            let s: Vec<f64> = p.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
            let q_minus_l = dot(&s, &step.metric.apply(&s)) - l * dot(&s, &s);
            if p.fg <= cur.fg - 0.5 * q_minus_l && p.fg <= cur.fg {
                break Some((p, step));
            }
            if n_bt >= MAX_BACKTRACKS {
                break None;
            }
            if plain_metric {
                t *= cfg.growth;
            }
            plain_metric = true;
            n_bt += 1;
        };
        let (next, residual, rank) = match accepted {
            Some((p, step)) => {
                let r = residual_from_input(&p.grad, &p.x, &step.prox_input, &step.metric);
                let rank = if step.metric.is_diagonal() { 0.0 } else { 1.0 };
                (p, r, rank)
            }
            None => {
                let r = probe_residual(f, g, &cur, t);
                (cur.clone(), r, 0.0)
            }
        };
        let d: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let yd: Vec<f64> = next.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        secant = if d.iter().all(|v| *v == 0.0) { None } else { Some((d, yd)) };
        cur = next;
        // beta_used carries the rank of the correction that was used
        rec.push(cur.fg, residual, t / margin, n_bt, vec![rank]);
    };
    Ok(rec.finish("mm_afista", cur.x, status))
}
