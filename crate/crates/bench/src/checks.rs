//! Numerical acceptance checks: each runs an independent oracle against the
//! fast path and reports a pass/fail verdict with the observed margins.

use std::time::Instant;

use afista::config::Reference;
use afista::epg::{beta_star, epg_step_alternating, epg_step_closed_form, extrapolate, model_value};
use afista::metric::{build_q_rank_r, DiagonalMetric, HessianOnSpan, Metric};
use afista::network::NetworkProblem;
use afista::oracle::{descent_lemma_excess, gradient_check, prox_grid_2d, scan_minimize};
use afista::problem::make_random_lasso;
use afista::prox::{g_value, prox_generic, prox_rank1};
use afista::solvers::{solve, SolverId};
use afista::vector::{dot, norm2, norm_inf};
use afista::{LowRankMetric, NonsmoothSpec, QuadraticProblem, Rng, Sign, SmoothObjective, SolverConfig, SolverRun};
use rayon::prelude::*;

use crate::config::BenchConfig;
use crate::runner::run_one;

#[derive(Debug, Clone)]
pub struct Check {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    /// Names of the failed sub-checks (`"runtime"` for an exceeded time limit).
    pub failed_parts: Vec<&'static str>,
    pub detail: String,
    pub seconds: f64,
}

impl Check {
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!("{verdict} [{:>2}] {} ({:.1}s): {}", self.id, self.name, self.seconds, self.detail)
    }
}

type Parts = Vec<(&'static str, bool)>;

fn timed(id: u32, name: &'static str, limit: Option<f64>, body: impl FnOnce() -> (Parts, String)) -> Check {
    let start = Instant::now();
    let (parts, mut detail) = body();
    let seconds = start.elapsed().as_secs_f64();
    let mut failed_parts: Vec<&'static str> = parts.iter().filter(|p| !p.1).map(|p| p.0).collect();
    if let Some(limit) = limit {
        if seconds >= limit {
            failed_parts.push("runtime");
            detail.push_str(&format!("; runtime limit {limit}s exceeded"));
        }
    }
    Check { id, name, passed: failed_parts.is_empty(), failed_parts, detail, seconds }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Lasso instance with `m = 4n` rows, `T = 1.2 L` and `R` random directions.
fn epg_instance(seed: u64, n: usize, r: usize) -> (QuadraticProblem, NonsmoothSpec, DiagonalMetric, Vec<Vec<f64>>, Vec<f64>) {
    let (q, g) = make_random_lasso(seed, n, 4 * n, 0.3, 0.05).expect("valid sizes");
    let mut rng = Rng::derived(seed, 7);
    let t = DiagonalMetric::scalar(n, 1.2 * q.l_max());
    let d = (0..r).map(|_| rng.normal_vec(n)).collect();
    let x = rng.normal_vec(n);
    (q, g, t, d, x)
}

/// Closed-form joint step against 200 rounds of alternating minimization.
pub fn closed_form_equivalence() -> Check {
    timed(1, "closed-form vs alternating joint step", Some(30.0), || {
        let gaps: Vec<(f64, f64)> = (0..100u64)
            .into_par_iter()
            .map(|i| {
                let n = [5, 20, 30][(i % 3) as usize];
                let r = 1 + ((i / 3) % 3) as usize;
                let (q, g, t, d, x) = epg_instance(1000 + i, n, r);
                let cf = epg_step_closed_form(&q, &g, &t, &d, &x).map(|s| s.result);
                let alt = epg_step_alternating(&q, &g, &t, &d, &x, 200);
                match (cf, alt) {
                    (Ok(cf), Ok(alt)) => ((cf.model_value - alt.model_value).abs(), max_abs_diff(&cf.x_next, &alt.x_next)),
                    _ => (f64::INFINITY, f64::INFINITY),
                }
            })
            .collect();
        let model = gaps.iter().map(|g| g.0).fold(0.0, f64::max);
        let iterate = gaps.iter().map(|g| g.1).fold(0.0, f64::max);
        (vec![("model", model <= 1e-7), ("iterate", iterate <= 1e-5)], format!("100 instances, max model gap {model:.2e} (<= 1e-7), max iterate gap {iterate:.2e} (<= 1e-5)"))
    })
}

/// The normal-equation `beta*` against a golden-section scan of the model in `beta`.
pub fn beta_star_scan() -> Check {
    timed(2, "beta* vs golden-section scan", Some(10.0), || {
        let errs: Vec<f64> = (0..100u64)
            .into_par_iter()
            .map(|i| {
                let n = 2 + (i % 29) as usize;
                let (q, g, t, d, x) = epg_instance(2000 + i, n, 1);
                let Ok(cf) = epg_step_closed_form(&q, &g, &t, &d, &x) else { return f64::INFINITY };
                let xn = cf.result.x_next;
                let m = |v: &[f64]| -> Vec<f64> {
                    let hv = q.apply_hessian(v);
                    t.apply(v).iter().zip(&hv).map(|(a, b)| a - b).collect()
                };
                let Ok(b) = beta_star(&d, m, &xn, &x) else { return f64::INFINITY };
                let b = b[0];
                let phi = |s: f64| model_value(&q, &g, &t, &xn, &extrapolate(&x, &d, &[s]).expect("one direction"));
                let width = 10.0 * (1.0 + b.abs());
                (b - scan_minimize(phi, b - width, b + width, 400, 1e-12)).abs()
            })
            .collect();
        let worst = errs.iter().copied().fold(0.0, f64::max);
        (vec![("beta", worst <= 1e-6)], format!("100 instances, max |beta* - scan| {worst:.2e} (<= 1e-6)"))
    })
}

/// Random PSD `H`, a diagonal `T` above it and `R` directions.
fn metric_case(seed: u64, n: usize, r: usize) -> (Vec<f64>, DiagonalMetric, Vec<Vec<f64>>) {
    let mut rng = Rng::new(seed);
    let m = n + 3;
    let b = rng.normal_vec(m * n);
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] = (0..m).map(|k| b[k * n + i] * b[k * n + j]).sum::<f64>() / m as f64;
        }
    }
    let bound = (0..n).map(|i| (0..n).map(|j| h[i * n + j].abs()).sum::<f64>()).fold(0.0, f64::max);
    let t = DiagonalMetric::new((0..n).map(|_| bound * rng.uniform(1.1, 2.0)).collect()).expect("positive");
    let d = (0..r).map(|_| rng.normal_vec(n)).collect();
    (h, t, d)
}

fn matvec(a: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| dot(&a[i * n..(i + 1) * n], v)).collect()
}

/// `w` minus its least-squares projection onto span(`cols`), applied twice.
fn project_out(cols: &[Vec<f64>], mut w: Vec<f64>) -> Option<Vec<f64>> {
    let r = cols.len();
    let mut gram = vec![0.0; r * r];
    for i in 0..r {
        for j in 0..r {
            gram[i * r + j] = dot(&cols[i], &cols[j]);
        }
    }
    for _ in 0..2 {
        let rhs: Vec<f64> = cols.iter().map(|c| dot(c, &w)).collect();
        let coef = afista::oracle::dense_solve(&gram, r, &rhs)?;
        for (c, col) in coef.iter().zip(cols) {
            w.iter_mut().zip(col).for_each(|(wi, ci)| *wi -= c * ci);
        }
    }
    Some(w)
}

/// `Q Q^-1 v = v`, `Q D = H D` and `Q = T` on `ker D^T`, plus the same
/// identity on `ker (T D - H D)^T` for comparison.
pub fn metric_algebra() -> Check {
    timed(3, "metric algebra identities", Some(10.0), || {
        let rows: Vec<[f64; 4]> = (0..1000u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = Rng::derived(i, 11);
                let n = 6 + rng.below(45);
                let r = 1 + rng.below(5);
                let (h, t, d) = metric_case(3000 + i, n, r);
                let y: Vec<Vec<f64>> = d.iter().map(|c| matvec(&h, c)).collect();
                let Ok(q) = HessianOnSpan::new(d.clone(), y.clone()).and_then(|s| build_q_rank_r(&t, &s)) else {
                    return [f64::INFINITY; 4];
                };
                let v = rng.normal_vec(n);
                let inv = q.apply_inverse(&v).map_or(f64::INFINITY, |w| {
                    let back = q.apply(&w);
                    norm2(&back.iter().zip(&v).map(|(a, b)| a - b).collect::<Vec<_>>()) / norm2(&v)
                });
                let secant = d
                    .iter()
                    .zip(&y)
                    .map(|(dc, yc)| max_abs_diff(&q.apply(dc), yc) / (1.0 + norm_inf(yc)))
                    .fold(0.0, f64::max);
                let on_complement = |cols: &[Vec<f64>], rng: &mut Rng| -> f64 {
                    let Some(x) = project_out(cols, rng.normal_vec(n)) else { return f64::INFINITY };
                    let tx = t.apply(&x);
                    max_abs_diff(&q.apply(&x), &tx) / (1.0 + norm_inf(&tx))
                };
                let ker_dt = on_complement(&d, &mut rng);
                let w_cols: Vec<Vec<f64>> =
                    d.iter().zip(&y).map(|(dc, yc)| t.apply(dc).iter().zip(yc).map(|(a, b)| a - b).collect()).collect();
                let ker_wt = on_complement(&w_cols, &mut rng);
                [inv, secant, ker_dt, ker_wt]
            })
            .collect();
        let worst = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
        let fails_dt = rows.iter().filter(|r| !(r[2] <= 1e-10)).count();
        let (inv, sec, kd, kw) = (worst(0), worst(1), worst(2), worst(3));
        (
            vec![("inverse", inv <= 1e-10), ("secant", sec <= 1e-10), ("ker_dt", kd <= 1e-10)],
            format!(
                "1000 cases, |QQ^-1v - v|/|v| {inv:.1e}, QD = HD {sec:.1e}, Q = T on ker D^T {kd:.1e} ({fails_dt} cases above 1e-10), Q = T on ker (TD - HD)^T {kw:.1e}"
            ),
        )
    })
}

/// `T - u u^T` with `u^T T^-1 u = 0.8`.
fn rank1_case(rng: &mut Rng, n: usize) -> LowRankMetric {
    let t: Vec<f64> = (0..n).map(|_| rng.uniform(0.5, 3.0)).collect();
    let mut u = rng.normal_vec(n);
    let s: f64 = u.iter().zip(&t).map(|(ui, ti)| ui * ui / ti).sum();
    let scale = (0.8 / s).sqrt();
    u.iter_mut().for_each(|x| *x *= scale);
    LowRankMetric::new(DiagonalMetric::new(t).expect("positive"), vec![u], Sign::Minus, 1.0).expect("valid")
}

fn regularizer_case(rng: &mut Rng, n: usize, which: u64) -> NonsmoothSpec {
    match which % 3 {
        0 => NonsmoothSpec::l1(rng.uniform(0.1, 2.0)),
        1 => NonsmoothSpec::nonneg(),
        _ => {
            let lo: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 0.0)).collect();
            let hi: Vec<f64> = lo.iter().map(|l| l + rng.uniform(0.2, 2.0)).collect();
            NonsmoothSpec::boxed(lo, hi).expect("ordered bounds")
        }
    }
}

/// Root-finding prox vs the inner solver vs a 2-D grid.
pub fn rank1_prox() -> Check {
    timed(4, "rank-1 prox three-way agreement", Some(60.0), || {
        let three: Vec<f64> = (0..50u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = Rng::new(4000 + i);
                let q = rank1_case(&mut rng, 2);
                let g = regularizer_case(&mut rng, 2, i);
                let v = [2.0 * rng.normal(), 2.0 * rng.normal()];
                let dq = q.to_dense();
                let grid = prox_grid_2d(&g, &[dq[0], dq[1], dq[2], dq[3]], &v, 6.0, 1e-4);
                let (Ok(root), Ok(inner)) = (prox_rank1(&g, &q, &v), prox_generic(&g, &q, &v, 1e-13)) else {
                    return f64::INFINITY;
                };
                max_abs_diff(&root, &grid).max(max_abs_diff(&inner.x, &grid)).max(max_abs_diff(&root, &inner.x))
            })
            .collect();
        let two: Vec<f64> = (0..200u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = Rng::new(5000 + i);
                let n = 1 + rng.below(30);
                let q = rank1_case(&mut rng, n);
                let g = regularizer_case(&mut rng, n, i);
                let v: Vec<f64> = rng.normal_vec(n).iter().map(|x| 2.0 * x).collect();
                match (prox_rank1(&g, &q, &v), prox_generic(&g, &q, &v, 1e-13)) {
                    (Ok(a), Ok(b)) => max_abs_diff(&a, &b.x),
                    _ => f64::INFINITY,
                }
            })
            .collect();
        let w3 = three.iter().copied().fold(0.0, f64::max);
        let w2 = two.iter().copied().fold(0.0, f64::max);
        (vec![("grid", w3 <= 2e-4), ("inner", w2 <= 1e-8)], format!("N=2 three-way max gap {w3:.1e} (<= 2e-4, 50 cases), root vs inner {w2:.1e} (<= 1e-8, 200 cases)"))
    })
}

/// Lasso used by the monotonicity and rate checks: underdetermined, so the
/// objective is not strongly convex.
fn check_lasso(seed: u64) -> (QuadraticProblem, NonsmoothSpec) {
    make_random_lasso(seed, 100, 50, 0.1, 0.05).expect("valid sizes")
}

const MONOTONE: [SolverId; 5] =
    [SolverId::Afista, SolverId::MmAfista, SolverId::Fbs, SolverId::Mfista, SolverId::AdaptiveMonotone];

pub fn monotonicity() -> Check {
    timed(5, "monotone decrease", None, || {
        let mut jobs: Vec<(SolverId, bool, u64)> = Vec::new();
        for id in MONOTONE {
            for seed in 0..10 {
                jobs.push((id, false, seed));
                if !id.needs_convexity() {
                    jobs.push((id, true, seed));
                }
            }
        }
        let results: Vec<(String, usize)> = jobs
            .par_iter()
            .map(|&(id, net, seed)| {
                let run = if net {
                    let (f, g, x0) = NetworkProblem::seeded(seed);
                    solve(id, &f, &g, &x0, &SolverConfig::default())
                } else {
                    let (q, g) = check_lasso(seed);
                    let cfg = SolverConfig { step_alpha: 0.95 / q.l_max(), ..Default::default() };
                    solve(id, &q, &g, &vec![0.0; 100], &cfg)
                };
                let label = format!("{}/{}/{}", id.as_str(), if net { "simple_net" } else { "lasso" }, seed);
                match run {
                    Ok(r) => (label, r.monotonicity_violations(1e-12).len()),
                    Err(_) => (label, usize::MAX),
                }
            })
            .collect();
        let bad: Vec<&(String, usize)> = results.iter().filter(|r| r.1 > 0).collect();
        let detail = if bad.is_empty() {
            format!("{} runs x 2000 iterations, 0 violations", results.len())
        } else {
            format!("{} of {} runs violate, e.g. {}", bad.len(), results.len(), bad[0].0)
        };
        (vec![("violations", bad.is_empty())], detail)
    })
}

/// Least-squares slope of `log gap` against `log k` over `k in [lo, hi]`,
/// using only gaps above `floor`. `None` if fewer than 10 such points.
pub fn loglog_slope(gaps: &[f64], lo: usize, hi: usize, floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = (lo..=hi.min(gaps.len().saturating_sub(1)))
        .filter(|&k| gaps[k] > floor)
        .map(|k| ((k as f64).ln(), gaps[k].ln()))
        .collect();
    if pts.len() < 10 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

struct RateRow {
    worst_excess: f64,
    slopes: [Option<f64>; 2],
    failed: bool,
}

fn rate_row(seed: u64) -> RateRow {
    let (q, g) = check_lasso(seed);
    let n = q.dim();
    let l = q.lipschitz().expect("quadratic");
    let ref_cfg = SolverConfig { step_alpha: 1.0 / l, max_iters: 100_000, backtracking: false, ..Default::default() };
    let Ok(reference) = solve(SolverId::Fbs, &q, &g, &vec![0.0; n], &ref_cfg) else {
        return RateRow { worst_excess: f64::INFINITY, slopes: [None; 2], failed: true };
    };
    let x_star = reference.final_x;
    let f_star = q.value(&x_star) + g_value(&g, &x_star);
    let cfg = SolverConfig { reference: Some(Reference { x_star, f_star }), ..Default::default() };
    let mut worst = f64::NEG_INFINITY;
    let mut slopes = [None; 2];
    let mut failed = false;
    for (j, id) in [SolverId::AdaptiveMonotone, SolverId::AdaptiveTseng].into_iter().enumerate() {
        let run: SolverRun = match solve(id, &q, &g, &vec![0.0; n], &cfg) {
            Ok(r) => r,
            Err(_) => {
                failed = true;
                continue;
            }
        };
        let Some(bounds) = run.rate_bounds.as_ref() else {
            failed = true;
            continue;
        };
        let gaps: Vec<f64> = run.trace.iter().map(|r| r.objective - f_star).collect();
        for (gap, b) in gaps.iter().zip(bounds) {
            worst = worst.max(gap - b);
        }
        slopes[j] = loglog_slope(&gaps, 50, 2000, 1e-10 * (1.0 + f_star.abs()));
    }
    RateRow { worst_excess: worst, slopes, failed }
}

/// Rate certificates of the two accelerated variants on convex lasso
/// instances, plus the empirical decay slope.
pub fn rate_certificates() -> Check {
    timed(6, "accelerated rate certificates", None, || {
        let rows: Vec<RateRow> = (0..10u64).into_par_iter().map(|s| rate_row(6000 + s)).collect();
        let worst = rows.iter().map(|r| r.worst_excess).fold(f64::NEG_INFINITY, f64::max);
        let failed = rows.iter().any(|r| r.failed);
        // no slope means the gap reached the reference accuracy before k = 60
        let steepest_allowed = -1.5;
        let slopes: Vec<f64> = rows.iter().flat_map(|r| r.slopes.iter().map(|s| s.unwrap_or(f64::NEG_INFINITY))).collect();
        let worst_slope = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (
            vec![("runs", !failed), ("bound", worst <= 1e-9), ("slope", worst_slope <= steepest_allowed)],
            format!(
                "10 instances x 2 methods, max(gap - bound) {worst:.2e} (<= 1e-9), worst log-log slope on [50, 2000] {worst_slope:.2} (<= -1.5)"
            ),
        )
    })
}

/// Backpropagation against central differences on 20 coordinates per seed.
pub fn gradient_correctness(seeds: &[u64]) -> (f64, Vec<f64>) {
    let errs: Vec<f64> = seeds
        .iter()
        .map(|&seed| {
            let (f, _, x0) = NetworkProblem::seeded(seed);
            let coords = Rng::derived(seed, 99).choose_indices(f.dim(), 20);
            gradient_check(&f, &x0, &coords, 1e-6)
        })
        .collect();
    (errs.iter().copied().fold(0.0, f64::max), errs)
}

pub fn gradient_check_criterion() -> Check {
    timed(7, "network gradient vs finite differences", Some(5.0), || {
        let (worst, _) = gradient_correctness(&[0, 1, 2, 3, 4]);
        (vec![("gradient", worst <= 1e-5)], format!("5 seeds x 20 coordinates, max relative error {worst:.2e} (<= 1e-5)"))
    })
}

/// The sparse network experiment with default settings over 10 seeds.
pub fn desk_reproduction() -> Check {
    timed(8, "sparse network reproduction", Some(300.0), || {
        let cfg = BenchConfig::default();
        let ids = [SolverId::Afista, SolverId::Mfista, SolverId::Fbs];
        let jobs: Vec<(SolverId, u64)> = ids.iter().flat_map(|&id| (0..10).map(move |s| (id, s))).collect();
        let out: Vec<Option<(f64, f64, f64)>> = jobs
            .par_iter()
            .map(|&(id, seed)| {
                run_one(&cfg, id, seed).ok().map(|o| {
                    let last = o.run.trace.last().expect("non-empty trace");
                    (last.objective, last.normalized_objective, o.sparsity)
                })
            })
            .collect();
        if out.iter().any(Option::is_none) {
            return (vec![("runs", false)], "a run failed".into());
        }
        let get = |id: usize, seed: usize| out[id * 10 + seed].expect("checked above");
        let mut sparsity: Vec<f64> = (0..10).map(|s| get(0, s).2).collect();
        sparsity.sort_by(f64::total_cmp);
        let median = 0.5 * (sparsity[4] + sparsity[5]);
        let vs_mfista = (0..10).filter(|&s| get(0, s).1 <= 1.05 * get(1, s).1).count();
        let vs_fbs = (0..10).filter(|&s| get(0, s).0 <= get(2, s).0).count();
        let (a, b, c) = ((0.75..=0.95).contains(&median), vs_mfista >= 7, vs_fbs == 10);
        let mark = |ok: bool| if ok { "ok" } else { "MISS" };
        (
            vec![("a", a), ("b", b), ("c", c)],
            format!(
                "(a) median aFISTA sparsity {median:.3} in [0.75, 0.95] {}; (b) within 1.05x MFISTA in {vs_mfista}/10 (>= 7) {}; (c) <= FBS in {vs_fbs}/10 {}",
                mark(a),
                mark(b),
                mark(c)
            ),
        )
    })
}

/// Descent lemma with `L = lambda_max(H)` on random pairs.
pub fn descent_lemma() -> Check {
    timed(9, "descent lemma on quadratics", None, || {
        let mut violations = 0usize;
        let mut worst = f64::NEG_INFINITY;
        for inst in 0..10u64 {
            let (q, _) = make_random_lasso(9000 + inst, 20, 30, 0.5, 0.0).expect("valid sizes");
            let l = q.l_max();
            let mut rng = Rng::derived(inst, 9);
            for _ in 0..1000 {
                let scale = rng.uniform(0.01, 10.0);
                let x: Vec<f64> = rng.normal_vec(20).iter().map(|v| scale * v).collect();
                let y: Vec<f64> = rng.normal_vec(20).iter().map(|v| scale * v).collect();
                let excess = descent_lemma_excess(&q, l, &x, &y);
                let rel = excess / (1.0 + q.value(&x).abs().max(q.value(&y).abs()));
                worst = worst.max(rel);
                if rel > 1e-10 {
                    violations += 1;
                }
            }
        }
        (vec![("descent", violations == 0)], format!("10^4 pairs, {violations} violations, max relative excess {worst:.2e} (<= 1e-10)"))
    })
}

/// Checks behind `bench oracle --suite <name>`.
pub fn suite(name: &str) -> Option<Vec<Check>> {
    match name {
        "theorem1" => Some(vec![closed_form_equivalence(), beta_star_scan(), metric_algebra()]),
        "rank1prox" => Some(vec![rank1_prox()]),
        "rates" => Some(vec![rate_certificates(), descent_lemma()]),
        _ => None,
    }
}
