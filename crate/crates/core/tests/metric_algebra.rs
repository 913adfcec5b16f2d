use afista::metric::{build_q_rank_r, sr1_memory_metric, DiagonalMetric, HessianOnSpan, Metric};
use afista::oracle::{dense_q, dense_solve};
use afista::vector::{dot, norm2};
use afista::{LowRankMetric, Rng, Sign};
use proptest::prelude::*;

/// Random PSD `H = B^T B / m`, a diagonal `T` dominating it and `R` directions.
fn setup(seed: u64, n: usize, r: usize) -> (Vec<f64>, DiagonalMetric, Vec<Vec<f64>>) {
    let mut rng = Rng::new(seed);
    let m = n + 3;
    let b: Vec<f64> = rng.normal_vec(m * n);
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] = (0..m).map(|k| b[k * n + i] * b[k * n + j]).sum::<f64>() / m as f64;
        }
    }
    let row_sum = (0..n).map(|i| (0..n).map(|j| h[i * n + j].abs()).sum::<f64>()).fold(0.0, f64::max);
    let t: Vec<f64> = (0..n).map(|_| row_sum * rng.uniform(1.1, 2.0)).collect();
    let d = (0..r).map(|_| rng.normal_vec(n)).collect();
    (h, DiagonalMetric::new(t).unwrap(), d)
}

fn matvec(a: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| dot(&a[i * n..(i + 1) * n], v)).collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&diff) / norm2(b).max(f64::MIN_POSITIVE)
}

/// Removes from `w` its component in span(`cols`), twice for accuracy.
fn project_out(cols: &[Vec<f64>], mut w: Vec<f64>) -> Vec<f64> {
    let r = cols.len();
    let mut gram = vec![0.0; r * r];
    for i in 0..r {
        for j in 0..r {
            gram[i * r + j] = dot(&cols[i], &cols[j]);
        }
    }
    for _ in 0..2 {
        let rhs: Vec<f64> = cols.iter().map(|c| dot(c, &w)).collect();
        let coef = dense_solve(&gram, r, &rhs).unwrap();
        for (c, col) in coef.iter().zip(cols) {
            w.iter_mut().zip(col).for_each(|(wi, ci)| *wi -= c * ci);
        }
    }
    w
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn q_identities(seed in any::<u64>(), n in 6usize..=50, r in 1usize..=5) {
        let (h, t, d) = setup(seed, n, r);
        let y: Vec<Vec<f64>> = d.iter().map(|c| matvec(&h, c)).collect();
        let q = build_q_rank_r(&t, &HessianOnSpan::new(d.clone(), y.clone()).unwrap()).unwrap();
        prop_assert!(q.is_positive_definite());

        let mut rng = Rng::derived(seed, 1);
        let v = rng.normal_vec(n);
        let qinv_v = q.apply_inverse(&v).unwrap();
        prop_assert!(rel_err(&q.apply(&qinv_v), &v) <= 1e-10);

        // Q D = H D
        for (dc, yc) in d.iter().zip(&y) {
            prop_assert!(rel_err(&q.apply(dc), yc) <= 1e-10);
        }
        // Q = T on the orthogonal complement of span(T D - Y)
        let w_cols: Vec<Vec<f64>> = d
            .iter()
            .zip(&y)
            .map(|(dc, yc)| t.apply(dc).iter().zip(yc).map(|(a, b)| a - b).collect())
            .collect();
        let w = project_out(&w_cols, rng.normal_vec(n));
        prop_assert!(rel_err(&q.apply(&w), &t.apply(&w)) <= 1e-10);

        let dense = dense_q(&t, &d, &y).unwrap();
        prop_assert!(rel_err(&q.to_dense(), &dense) <= 1e-10);
    }

    #[test]
    fn invariant_span_gives_t_on_orthogonal_complement(seed in any::<u64>(), n in 4usize..=30, r in 1usize..=3) {
        // H = I + P with P the projector onto span D, T = tau I: span D is H-invariant
        let mut rng = Rng::new(seed);
        let d: Vec<Vec<f64>> = (0..r).map(|_| rng.normal_vec(n)).collect();
        let tau = 3.0;
        let t = DiagonalMetric::scalar(n, tau);
        let h_apply = |v: &[f64]| -> Vec<f64> {
            let perp = project_out(&d, v.to_vec());
            v.iter().zip(&perp).map(|(a, p)| a + (a - p)).collect()
        };
        let y: Vec<Vec<f64>> = d.iter().map(|c| h_apply(c)).collect();
        let q = build_q_rank_r(&t, &HessianOnSpan::new(d.clone(), y).unwrap()).unwrap();
        let x = project_out(&d, rng.normal_vec(n));
        prop_assert!(rel_err(&q.apply(&x), &t.apply(&x)) <= 1e-10);
    }

    #[test]
    fn sr1_secant_and_inverse(seed in any::<u64>(), n in 2usize..=40) {
        let (h, t, d) = setup(seed, n, 1);
        let y = matvec(&h, &d[0]);
        let q = sr1_memory_metric(&t, &d[0], &y);
        prop_assert_eq!(q.rank(), 1);
        prop_assert_eq!(q.sign, Sign::Minus);
        prop_assert!(rel_err(&q.apply(&d[0]), &y) <= 1e-10);
        let v = Rng::derived(seed, 2).normal_vec(n);
        prop_assert!(rel_err(&q.apply(&q.apply_inverse(&v).unwrap()), &v) <= 1e-10);
    }
}

#[test]
fn q_differs_from_t_on_ker_dt_in_general() {
    // T = 2I, H = [[1, .5], [.5, 1]], d = e1: Q = [[1, .5], [.5, 1.75]]
    let t = DiagonalMetric::scalar(2, 2.0);
    let d = vec![vec![1.0, 0.0]];
    let y = vec![vec![1.0, 0.5]];
    let q = build_q_rank_r(&t, &HessianOnSpan::new(d, y).unwrap()).unwrap();
    let qx = q.apply(&[0.0, 1.0]);
    assert!((qx[0] - 0.5).abs() < 1e-15 && (qx[1] - 1.75).abs() < 1e-15);
}

#[test]
fn damping_zero_is_diagonal() {
    let (h, t, d) = setup(4, 10, 1);
    let y = matvec(&h, &d[0]);
    let q = sr1_memory_metric(&t, &d[0], &y).with_damping(0.0);
    assert!(q.is_diagonal());
    let v = vec![1.0; 10];
    assert_eq!(q.apply(&v), t.apply(&v));
}

#[test]
fn identity_minus_rank_one_inverse_by_hand() {
    // Q = 2I - u u^T with u = e1: Q = diag(1, 2)
    let t = DiagonalMetric::scalar(2, 2.0);
    let q = LowRankMetric::new(t, vec![vec![1.0, 0.0]], Sign::Minus, 1.0).unwrap();
    let x = q.apply_inverse(&[3.0, 4.0]).unwrap();
    assert!((x[0] - 3.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
}

#[test]
fn dense_linear_algebra_reference() {
    use nalgebra::DMatrix;
    for seed in 0..40u64 {
        let n = 3 + (seed as usize % 20);
        let r = 1 + (seed as usize % 3);
        let (h, t, d) = setup(seed, n, r);
        let y: Vec<Vec<f64>> = d.iter().map(|c| matvec(&h, c)).collect();
        let q = build_q_rank_r(&t, &HessianOnSpan::new(d, y).unwrap()).unwrap();
        let dense = DMatrix::from_row_slice(n, n, &q.to_dense());
        let eig = dense.clone().symmetric_eigen();
        assert_eq!(q.is_positive_definite(), eig.eigenvalues.min() > 0.0);
        let inv = dense.try_inverse().unwrap();
        let v = Rng::derived(seed, 5).normal_vec(n);
        let reference: Vec<f64> = (&inv * nalgebra::DVector::from_vec(v.clone())).iter().copied().collect();
        assert!(rel_err(&q.apply_inverse(&v).unwrap(), &reference) <= 1e-10, "seed {seed}");
    }
    // power iteration against the symmetric eigensolver
    for seed in 0..10u64 {
        let (lasso, _) = afista::problem::make_random_lasso(seed, 15, 25, 0.3, 0.0).unwrap();
        let h = DMatrix::from_row_slice(15, 15, &lasso.hessian_dense());
        let top = h.symmetric_eigen().eigenvalues.max();
        assert!((lasso.l_max() - top).abs() <= 1e-8 * top, "seed {seed}");
    }
}
