use afista::layout::{pack, unpack};
use afista::network::{generate_data, init_params, nn_forward, nn_value_grad, sparsity_level, NetworkProblem, NetworkSpec, RegressionDataset};
use afista::oracle::{descent_lemma_excess, finite_diff_gradient, gradient_check};
use afista::problem::make_random_lasso;
use afista::solvers::{solve, SolverId};
use afista::vector::norm_inf;
use afista::{BlockLayout, BlockSpec, Matrix, ParamVector, Rng, SmoothObjective, SolverConfig};
use proptest::prelude::*;

struct Cube;

impl SmoothObjective for Cube {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, x: &[f64]) -> f64 {
        x[0].powi(3)
    }
    fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (x[0].powi(3), vec![3.0 * x[0] * x[0]])
    }
}

#[test]
fn finite_differences_by_hand() {
    let fd = finite_diff_gradient(&Cube, &[2.0], &[0], 1e-5 / 3.0);
    assert!((fd[0] - 12.0).abs() <= 1e-6);
    let (q, _) = make_random_lasso(1, 2, 4, 1.0, 0.0).unwrap();
    let fd = finite_diff_gradient(&q, &[1.0, 2.0], &[0, 1], 1e-6);
    let g = q.gradient(&[1.0, 2.0]);
    assert!((fd[0] - g[0]).abs() <= 1e-8 && (fd[1] - g[1]).abs() <= 1e-8);
}

#[test]
fn network_gradient_matches_finite_differences() {
    for seed in 0..5 {
        let (f, _, x0) = NetworkProblem::seeded(seed);
        let mut rng = Rng::derived(seed, 99);
        let coords = rng.choose_indices(f.dim(), 20);
        let err = gradient_check(&f, &x0, &coords, 1e-6);
        assert!(err <= 1e-5, "seed {seed}: {err}");
    }
}

#[test]
fn gradient_stable_near_zero_preactivations() {
    // W0 = 0 puts every first-layer pre-activation at its bias, here 1e-3
    let spec = NetworkSpec::default();
    let data = generate_data(0);
    let mut x = init_params(&spec, 0);
    let (off, _) = spec.layout.find("W0").unwrap();
    x[off..off + 10].iter_mut().for_each(|v| *v = 0.0);
    let (boff, _) = spec.layout.find("b0").unwrap();
    x[boff..boff + 10].iter_mut().for_each(|v| *v = 1e-3);
    let f = NetworkProblem::new(spec, data);
    let coords: Vec<usize> = (0..20).collect();
    assert!(gradient_check(&f, &x, &coords, 1e-6) <= 1e-5);
}

#[test]
fn descent_lemma_on_quadratics() {
    let mut violations = 0;
    for seed in 0..10 {
        let (q, _) = make_random_lasso(seed, 12, 20, 0.5, 0.0).unwrap();
        let l = q.l_max();
        let mut rng = Rng::derived(seed, 3);
        for _ in 0..1000 {
            let x = rng.normal_vec(12);
            let y = rng.normal_vec(12);
            let scale = 1.0 + q.value(&x).abs().max(q.value(&y).abs());
            if descent_lemma_excess(&q, l, &x, &y) > 1e-10 * scale {
                violations += 1;
            }
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn hessvec_is_gradient_difference() {
    let (q, _) = make_random_lasso(2, 15, 25, 0.3, 0.0).unwrap();
    let mut rng = Rng::new(5);
    let x = rng.normal_vec(15);
    let v = rng.normal_vec(15);
    let xv: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + b).collect();
    let diff: Vec<f64> = q.gradient(&xv).iter().zip(q.gradient(&x)).map(|(a, b)| a - b).collect();
    let hv = q.apply_hessian(&v);
    assert!(hv.iter().zip(&diff).all(|(a, b)| (a - b).abs() <= 1e-10));
    assert!(q.hessvec(&x, &v).iter().zip(&hv).all(|(a, b)| (a - b).abs() <= 1e-10));
}

#[test]
fn large_lambda_gives_zero_minimizer() {
    let (q, _) = make_random_lasso(6, 10, 15, 0.3, 0.0).unwrap();
    let lam = 1.01 * norm_inf(q.b());
    let g = afista::NonsmoothSpec::l1(lam);
    let cfg = SolverConfig { step_alpha: 0.9 / q.l_max(), max_iters: 3000, ..Default::default() };
    let run = solve(SolverId::Fbs, &q, &g, &[1.0; 10], &cfg).unwrap();
    assert!(run.final_x.iter().all(|v| *v == 0.0), "{:?}", run.final_x);
}

#[test]
fn data_model() {
    let d = generate_data(4);
    assert_eq!(d.len(), 80);
    assert_eq!(d.outliers.len(), 20);
    assert_eq!(d.noise_sigma, 1.5);
    assert_eq!(d.x[0], -3.0);
    assert_eq!(d.x[79], 3.0);
    assert_eq!(d, generate_data(4));
    assert_ne!(d.y, generate_data(5).y);
}

#[test]
fn inlier_noise_level() {
    for seed in 0..100 {
        let d = generate_data(seed);
        let res: Vec<f64> = (0..80)
            .filter(|i| d.outliers.binary_search(i).is_err())
            .map(|i| d.y[i] - afista::network::target_fn(d.x[i]))
            .collect();
        let mean = res.iter().sum::<f64>() / res.len() as f64;
        let var = res.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (res.len() - 1) as f64;
        let std = var.sqrt();
        assert!((1.0..=2.0).contains(&std), "seed {seed}: {std}");
    }
}

#[test]
fn dataset_csv_round_trip() {
    let d = generate_data(7);
    let text = d.to_csv();
    assert!(text.starts_with("x,y,is_outlier\n"));
    assert_eq!(RegressionDataset::from_csv(&text).unwrap(), d);
    assert!(RegressionDataset::from_csv("a,b\n1,2\n").is_err());
}

#[test]
fn forward_batch_equals_single_samples() {
    let spec = NetworkSpec::default();
    let x = init_params(&spec, 3);
    let inputs = [-2.5, -0.1, 0.0, 1.7];
    let batch = nn_forward(&x, &spec, &inputs).unwrap();
    for (i, xi) in inputs.iter().enumerate() {
        assert_eq!(nn_forward(&x, &spec, &[*xi]).unwrap()[0], batch[i]);
    }
    assert!(nn_forward(&x[..100], &spec, &inputs).is_err());
}

#[test]
fn small_eps_approaches_absolute_value() {
    let x = init_params(&NetworkSpec::default(), 2);
    let abs_spec = NetworkSpec::new([1, 10, 10, 1], 0.0, 1.0);
    let reference = nn_forward(&x, &abs_spec, &[0.7]).unwrap()[0];
    let mut prev = f64::INFINITY;
    for eps in [1e-2, 1e-4] {
        let spec = NetworkSpec::new([1, 10, 10, 1], eps, 1.0);
        let gap = (nn_forward(&x, &spec, &[0.7]).unwrap()[0] - reference).abs();
        assert!(gap < prev);
        prev = gap;
    }
    assert!(prev < 1e-2);
}

#[test]
fn loss_floor_and_monotonicity() {
    let spec = NetworkSpec::default();
    let x = init_params(&spec, 1);
    let mut data = generate_data(1);
    let pred = nn_forward(&x, &spec, &data.x).unwrap();
    let base = data.clone();
    data.y = pred.clone();
    let (v, _) = nn_value_grad(&x, &spec, &data).unwrap();
    assert!((v - 8.0).abs() < 1e-12);
    // doubling every residual increases the loss
    let mut doubled = base.clone();
    doubled.y = base.y.iter().zip(&pred).map(|(y, p)| p + 2.0 * (y - p)).collect();
    assert!(nn_value_grad(&x, &spec, &doubled).unwrap().0 > nn_value_grad(&x, &spec, &base).unwrap().0);
}

#[test]
fn sparsity_counts_weights_only() {
    let spec = NetworkSpec::default();
    assert_eq!(sparsity_level(&vec![0.0; 141], &spec.layout, 0.0), 1.0);
    assert_eq!(sparsity_level(&vec![1.0; 141], &spec.layout, 0.0), 0.0);
    let mut x = vec![1.0; 141];
    let (boff, _) = spec.layout.find("b1").unwrap();
    x[boff] = 0.0;
    assert_eq!(sparsity_level(&x, &spec.layout, 0.0), 0.0);
    // solver outputs hold exact zeros, so both tolerances count the same
    let (f, g, x0) = NetworkProblem::seeded(0);
    let run = solve(SolverId::Fbs, &f, &g, &x0, &SolverConfig { max_iters: 200, ..Default::default() }).unwrap();
    let xs = &run.final_x;
    assert_eq!(sparsity_level(xs, &spec.layout, 0.0), sparsity_level(xs, &spec.layout, 1e-12));
}

#[test]
fn layout_sizes() {
    assert_eq!(NetworkSpec::default().layout.total(), 141);
    let two = BlockLayout::new(vec![BlockSpec::new("a", 1, 1, true), BlockSpec::new("b", 1, 1, false)]);
    let v = pack(&[Matrix::column(vec![2.0]), Matrix::column(vec![3.0])], &two).unwrap();
    assert_eq!(v.as_slice(), &[2.0, 3.0]);
    assert_eq!(pack(&[], &BlockLayout::new(vec![])).unwrap().as_slice().len(), 0);
    assert!(unpack(&[1.0, 2.0, 3.0], &two).is_err());
    assert!(pack(&[Matrix::column(vec![2.0, 1.0]), Matrix::column(vec![3.0])], &two).is_err());
}

#[test]
fn param_vector_rejects_non_finite() {
    assert!(ParamVector::new(vec![1.0, f64::NAN]).is_err());
    assert!(ParamVector::new(vec![f64::INFINITY]).is_err());
    assert!(ParamVector::new(vec![1.0, 2.0]).is_ok());
}

proptest! {
    #[test]
    fn pack_unpack_round_trip(seed in any::<u64>()) {
        let layout = NetworkSpec::default().layout;
        let v = Rng::new(seed).normal_vec(141);
        let blocks = unpack(&v, &layout).unwrap();
        let packed = pack(&blocks, &layout).unwrap();
        prop_assert_eq!(packed.as_slice(), v.as_slice());
    }

    #[test]
    fn rng_streams_are_reproducible(seed in any::<u64>(), stream in 0u64..4) {
        let a = Rng::derived(seed, stream).normal_vec(16);
        let b = Rng::derived(seed, stream).normal_vec(16);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn trace_normalization(seed in 0u64..50) {
        let (q, g) = make_random_lasso(seed, 8, 12, 0.4, 0.1).unwrap();
        let cfg = SolverConfig { step_alpha: 0.9 / q.l_max(), max_iters: 20, ..Default::default() };
        let run = solve(SolverId::Afista, &q, &g, &[1.0; 8], &cfg).unwrap();
        let first = run.trace[0].objective;
        prop_assert_eq!(run.trace[0].normalized_objective, 1.0);
        for r in &run.trace {
            prop_assert!((r.normalized_objective - r.objective / first).abs() <= 1e-15 * r.normalized_objective.abs());
        }
    }
}
