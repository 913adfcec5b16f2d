use afista::config::Reference;
use afista::metric::{DiagonalMetric, Metric};
use afista::network::NetworkProblem;
use afista::problem::make_random_lasso;
use afista::prox::g_value;
use afista::solvers::mm_step;
use afista::solvers::{solve, stationarity_residual, theta_sequence, SolverId};
use afista::vector::norm2;
use afista::{Error, NonsmoothSpec, QuadraticProblem, SmoothObjective, SolverConfig};

fn lasso(seed: u64) -> (QuadraticProblem, NonsmoothSpec, SolverConfig) {
    let (q, g) = make_random_lasso(seed, 40, 30, 0.2, 0.05).unwrap();
    let cfg = SolverConfig { step_alpha: 0.95 / q.l_max(), max_iters: 400, ..Default::default() };
    (q, g, cfg)
}

const MONOTONE: [SolverId; 5] =
    [SolverId::Afista, SolverId::MmAfista, SolverId::Fbs, SolverId::Mfista, SolverId::AdaptiveMonotone];

#[test]
fn monotone_solvers_on_lasso() {
    for seed in 0..3 {
        let (q, g, cfg) = lasso(seed);
        let x0 = vec![1.0; 40];
        for id in MONOTONE {
            let run = solve(id, &q, &g, &x0, &cfg).unwrap();
            assert!(run.monotonicity_violations(1e-12).is_empty(), "{} seed {seed}", id.as_str());
        }
    }
}

#[test]
fn monotone_solvers_on_network() {
    let (f, g, x0) = NetworkProblem::seeded(3);
    let cfg = SolverConfig { max_iters: 150, ..Default::default() };
    for id in MONOTONE.into_iter().filter(|id| !id.needs_convexity()) {
        let run = solve(id, &f, &g, &x0, &cfg).unwrap();
        assert!(run.monotonicity_violations(1e-12).is_empty(), "{}", id.as_str());
        assert!(run.trace.iter().all(|r| r.objective >= 8.0 - 1e-9));
    }
}

#[test]
fn afista_without_extrapolation_is_fbs() {
    let (f, g, x0) = NetworkProblem::seeded(1);
    let cfg = SolverConfig { max_iters: 100, beta_samples: vec![0.0], backtracking: false, ..Default::default() };
    let a = solve(SolverId::Afista, &f, &g, &x0, &cfg).unwrap();
    let b = solve(SolverId::Fbs, &f, &g, &x0, &cfg).unwrap();
    assert_eq!(a.final_x, b.final_x);
    let bits = |r: &afista::SolverRun| r.objectives().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn ipiano_without_inertia_is_fbs() {
    let (f, g, x0) = NetworkProblem::seeded(2);
    let cfg = SolverConfig { max_iters: 100, ipiano_beta: 0.0, backtracking: false, ..Default::default() };
    let a = solve(SolverId::Ipiano, &f, &g, &x0, &cfg).unwrap();
    let b = solve(SolverId::Fbs, &f, &g, &x0, &cfg).unwrap();
    assert_eq!(a.final_x, b.final_x);
}

#[test]
fn mm_step_matches_closed_form_on_quadratics() {
    for seed in 0..10 {
        let (q, g) = make_random_lasso(seed, 12, 48, 0.3, 0.05).unwrap();
        let t = DiagonalMetric::scalar(12, 1.2 * q.l_max());
        let x: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
        let d: Vec<f64> = (0..12).map(|i| (i as f64 * 1.3 + seed as f64).cos()).collect();
        let (_, grad) = q.quad_value_grad(&x);
        let step = mm_step(&g, &t, &x, &grad, &d, &q.apply_hessian(&d), 1.0).unwrap();
        let cf = afista::epg::epg_step_closed_form(&q, &g, &t, &[d], &x).unwrap();
        let gap = step.x_next.iter().zip(&cf.result.x_next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap <= 1e-8, "seed {seed}: {gap}");
    }
}

#[test]
fn mm_step_without_damping_is_plain() {
    let (q, g) = make_random_lasso(4, 10, 30, 0.3, 0.1).unwrap();
    let t = DiagonalMetric::scalar(10, 2.0 * q.l_max());
    let x = vec![0.5; 10];
    let d = vec![1.0; 10];
    let (_, grad) = q.quad_value_grad(&x);
    let step = mm_step(&g, &t, &x, &grad, &d, &q.apply_hessian(&d), 0.0).unwrap();
    assert_eq!(step.x_next, afista::epg::prox_grad_step(&g, &t, &x, &grad));
}

#[test]
fn scalar_lasso_closed_form() {
    // f(x) = 1/2 (a x - y)^2, minimizer soft(a y, lambda) / a^2
    let a = afista::Matrix::new(1, 1, vec![2.0]).unwrap();
    let q = QuadraticProblem::least_squares(a, vec![3.0]).unwrap();
    let g = NonsmoothSpec::l1(1.5);
    let expected = (2.0 * 3.0 - 1.5) / 4.0;
    let cfg = SolverConfig { step_alpha: 0.2, max_iters: 500, ..Default::default() };
    for id in SolverId::ALL.into_iter().filter(|id| *id != SolverId::Ipiano) {
        let run = solve(id, &q, &g, &[0.0], &cfg).unwrap();
        assert!((run.final_x[0] - expected).abs() <= 1e-10, "{}: {}", id.as_str(), run.final_x[0]);
    }
    // iPiano needs alpha < 2 (1 - beta) / L = 0.025 here
    let cfg = SolverConfig { step_alpha: 0.02, max_iters: 20_000, backtracking: false, ..Default::default() };
    let run = solve(SolverId::Ipiano, &q, &g, &[0.0], &cfg).unwrap();
    assert!((run.final_x[0] - expected).abs() <= 1e-10, "ipiano: {}", run.final_x[0]);
}

#[test]
fn fbs_one_step_soft_thresholds() {
    // f = 1/2 |x - b|^2 from 0 with alpha = 1: x1 = soft(b, lambda)
    let q = QuadraticProblem::dense(vec![1.0, 0.0, 0.0, 1.0], vec![-2.0, 0.3], 0.0).unwrap();
    let g = NonsmoothSpec::l1(0.5);
    let cfg = SolverConfig { step_alpha: 1.0, max_iters: 1, backtracking: false, ..Default::default() };
    let run = solve(SolverId::Fbs, &q, &g, &[0.0, 0.0], &cfg).unwrap();
    assert_eq!(run.final_x, vec![1.5, 0.0]);
}

fn reference(q: &QuadraticProblem, g: &NonsmoothSpec) -> Reference {
    let cfg = SolverConfig { step_alpha: 1.0 / q.lipschitz().unwrap(), max_iters: 30_000, backtracking: false, ..Default::default() };
    let run = solve(SolverId::Fbs, q, g, &vec![0.0; q.dim()], &cfg).unwrap();
    let x = run.final_x;
    let f_star = q.value(&x) + g_value(g, &x);
    Reference { x_star: x, f_star }
}

#[test]
fn rate_certificates_hold() {
    for seed in 0..3 {
        let (q, g) = make_random_lasso(100 + seed, 30, 60, 0.2, 0.02).unwrap();
        let r = reference(&q, &g);
        let f_star = r.f_star;
        let cfg = SolverConfig { max_iters: 500, reference: Some(r), ..Default::default() };
        let x0 = vec![1.0; 30];
        for id in [SolverId::AdaptiveMonotone, SolverId::AdaptiveTseng] {
            let run = solve(id, &q, &g, &x0, &cfg).unwrap();
            let bounds = run.rate_bounds.as_ref().expect("bounds recorded");
            assert_eq!(bounds.len(), run.trace.len());
            for (rec, b) in run.trace.iter().zip(bounds) {
                assert!(rec.objective - f_star <= b + 1e-9, "{} k={} gap {} bound {b}", id.as_str(), rec.iter, rec.objective - f_star);
            }
        }
    }
}

#[test]
fn accelerated_variants_refuse_nonconvex() {
    let (f, g, x0) = NetworkProblem::seeded(0);
    let cfg = SolverConfig { max_iters: 5, ..Default::default() };
    for id in [SolverId::AdaptiveMonotone, SolverId::AdaptiveTseng] {
        assert!(matches!(solve(id, &f, &g, &x0, &cfg), Err(Error::Precondition(_))));
    }
}

#[test]
fn theta_sequence_recursion() {
    assert_eq!(theta_sequence(0, 1.0), 1.0);
    assert_eq!(theta_sequence(2, 1.0), 0.5);
    let mut prev = theta_sequence(0, 1.0);
    for k in 1..=1_000_000 {
        let th = theta_sequence(k, 1.0);
        assert!((1.0 - th) / (th * th) <= 1.0 / (prev * prev), "k={k}");
        prev = th;
    }
}

#[test]
fn residual_properties() {
    let (q, g) = make_random_lasso(8, 15, 30, 0.3, 0.1).unwrap();
    let _ = g;
    let l = q.l_max();
    let t = DiagonalMetric::scalar(15, 2.0 * l);
    let y: Vec<f64> = (0..15).map(|i| (i as f64).sin()).collect();
    assert_eq!(stationarity_residual(&q, &y, &y, &t), 0.0);
    for k in 0..50 {
        let x: Vec<f64> = y.iter().enumerate().map(|(i, v)| v + ((i * 7 + k) as f64).cos()).collect();
        let r = stationarity_residual(&q, &x, &y, &t);
        // direct evaluation of |grad f(x) - grad f(y) - T (x - y)|
        let (gx, gy) = (q.gradient(&x), q.gradient(&y));
        let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let tv = t.apply(&diff);
        let direct: Vec<f64> = (0..15).map(|i| gx[i] - gy[i] - tv[i]).collect();
        assert!((r - norm2(&direct)).abs() <= 1e-12 * (1.0 + r));
        assert!(r <= (l + 2.0 * l) * norm2(&diff) * (1.0 + 1e-12));
    }
}

#[test]
fn afista_residual_converges_on_lasso() {
    let (q, g) = make_random_lasso(21, 20, 60, 0.2, 0.05).unwrap();
    let cfg = SolverConfig { step_alpha: 0.95 / q.l_max(), max_iters: 5000, tol_residual: 1e-6, ..Default::default() };
    let run = solve(SolverId::Afista, &q, &g, &[0.0; 20], &cfg).unwrap();
    assert_eq!(run.status, afista::Status::Converged);
}

#[test]
fn mfista_beats_fbs_on_smooth_quadratics() {
    let mut wins = 0;
    for seed in 0..10 {
        let (q, _) = make_random_lasso(300 + seed, 50, 60, 0.3, 0.0).unwrap();
        let g = NonsmoothSpec::zero();
        let cfg = SolverConfig { step_alpha: 1.0 / q.lipschitz().unwrap(), max_iters: 200, backtracking: false, ..Default::default() };
        let x0 = vec![1.0; 50];
        let m = solve(SolverId::Mfista, &q, &g, &x0, &cfg).unwrap().final_objective();
        let f = solve(SolverId::Fbs, &q, &g, &x0, &cfg).unwrap().final_objective();
        wins += usize::from(m <= f);
    }
    assert!(wins >= 6, "mfista ahead in {wins}/10");
}

#[test]
fn seeded_runs_are_reproducible() {
    let (f, g, x0) = NetworkProblem::seeded(5);
    let cfg = SolverConfig { max_iters: 50, ..Default::default() };
    for id in [SolverId::Afista, SolverId::MmAfista, SolverId::Ipiano] {
        let a = solve(id, &f, &g, &x0, &cfg).unwrap();
        let b = solve(id, &f, &g, &x0, &cfg).unwrap();
        assert_eq!(a.final_x, b.final_x, "{}", id.as_str());
    }
}
