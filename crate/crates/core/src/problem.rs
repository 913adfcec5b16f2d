//! Smooth oracles and the quadratic test problems.

use crate::error::{Error, Result};
use crate::layout::Matrix;
use crate::prox::NonsmoothSpec;
use crate::rng::Rng;
use crate::vector::{add_scaled, dot, norm2};

/// Smooth part `f` of the composite objective.
pub trait SmoothObjective: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>);

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.value_grad(x).1
    }

    /// Hessian-vector product. The default is a central difference of gradients.
    fn hessvec(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let nv = norm2(v);
        if nv == 0.0 {
            return vec![0.0; v.len()];
        }
        let h = 1e-6 * (1.0 + norm2(x)) / nv;
        let gp = self.gradient(&add_scaled(x, h, v));
        let gm = self.gradient(&add_scaled(x, -h, v));
        gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
    }

    fn as_quadratic(&self) -> Option<&QuadraticProblem> {
        None
    }

    fn is_convex(&self) -> bool {
        false
    }

    /// Global Lipschitz constant of the gradient, when known.
    fn lipschitz(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone)]
enum Form {
    /// Explicit symmetric Hessian, row-major.
    Dense(Vec<f64>),
    /// `f(x) = 1/2 |A x - t|^2`, Hessian `A^T A` kept implicit.
    LeastSquares { a: Matrix, target: Vec<f64> },
}

/// `f(x) = 1/2 <x, H x> + <b, x> + c`.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    n: usize,
    form: Form,
    b: Vec<f64>,
    c: f64,
    l_max: f64,
    convex: bool,
}

impl QuadraticProblem {
    /// Dense symmetric `h` (row-major, `n x n`).
    pub fn dense(h: Vec<f64>, b: Vec<f64>, c: f64) -> Result<Self> {
        let n = b.len();
        if h.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: h.len() });
        }
        for i in 0..n {
            for j in 0..i {
                let (a, s) = (h[i * n + j], h[j * n + i]);
                if (a - s).abs() > 1e-12 * (1.0 + a.abs()) {
                    return Err(Error::Precondition("Hessian must be symmetric".into()));
                }
            }
        }
        let mut p = Self { n, form: Form::Dense(h), b, c, l_max: 0.0, convex: false };
        p.l_max = p.estimate_lambda_max();
        p.convex = p.check_psd();
        Ok(p)
    }

    /// `1/2 |A x - target|^2` with `A` of shape `m x n`.
    pub fn least_squares(a: Matrix, target: Vec<f64>) -> Result<Self> {
        if target.len() != a.rows {
            return Err(Error::DimensionMismatch { expected: a.rows, got: target.len() });
        }
        let n = a.cols;
        let b: Vec<f64> = atx(&a, &target).iter().map(|v| -v).collect();
        let c = 0.5 * dot(&target, &target);
        let mut p = Self { n, form: Form::LeastSquares { a, target }, b, c, l_max: 0.0, convex: true };
        p.l_max = p.estimate_lambda_max();
        Ok(p)
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Power-iteration estimate of the largest Hessian eigenvalue.
    pub fn l_max(&self) -> f64 {
        self.l_max
    }

    /// `H v`.
    pub fn apply_hessian(&self, v: &[f64]) -> Vec<f64> {
        match &self.form {
            Form::Dense(h) => (0..self.n).map(|i| dot(&h[i * self.n..(i + 1) * self.n], v)).collect(),
            Form::LeastSquares { a, .. } => atx(a, &ax(a, v)),
        }
    }

    /// Dense copy of `H` (validation only).
    pub fn hessian_dense(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.n * self.n];
        let mut e = vec![0.0; self.n];
        for j in 0..self.n {
            e[j] = 1.0;
            let col = self.apply_hessian(&e);
            e[j] = 0.0;
            for i in 0..self.n {
                h[i * self.n + j] = col[i];
            }
        }
        h
    }

    /// `(1/2 x^T H x + b^T x + c, H x + b)`.
    pub fn quad_value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        match &self.form {
            Form::Dense(_) => {
                let hx = self.apply_hessian(x);
                let v = 0.5 * dot(x, &hx) + dot(&self.b, x) + self.c;
                let g = hx.iter().zip(&self.b).map(|(a, b)| a + b).collect();
                (v, g)
            }
            Form::LeastSquares { a, target } => {
                let r: Vec<f64> = ax(a, x).iter().zip(target).map(|(p, t)| p - t).collect();
                (0.5 * dot(&r, &r), atx(a, &r))
            }
        }
    }

    fn estimate_lambda_max(&self) -> f64 {
        power_iteration(|v| self.apply_hessian(v), self.n, 1e-10, 100_000)
    }

    fn check_psd(&self) -> bool {
        use crate::dense::{Cholesky, Square};
        let Form::Dense(h) = &self.form else { return true };
        let mut m = Square { n: self.n, data: h.clone() };
        let shift = 1e-12 * (1.0 + self.l_max);
        for i in 0..self.n {
            m.data[i * self.n + i] += shift;
        }
        Cholesky::factor(&m, 0.0).is_ok()
    }
}

impl SmoothObjective for QuadraticProblem {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.quad_value_grad(x).0
    }

    fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        self.quad_value_grad(x)
    }

    fn hessvec(&self, _x: &[f64], v: &[f64]) -> Vec<f64> {
        self.apply_hessian(v)
    }

    fn as_quadratic(&self) -> Option<&QuadraticProblem> {
        Some(self)
    }

    fn is_convex(&self) -> bool {
        self.convex
    }

    fn lipschitz(&self) -> Option<f64> {
        // power iteration approaches from below; a relative 1e-9 keeps it an upper bound
        Some(self.l_max * (1.0 + 1e-9))
    }
}

fn ax(a: &Matrix, x: &[f64]) -> Vec<f64> {
    (0..a.rows).map(|i| dot(&a.data[i * a.cols..(i + 1) * a.cols], x)).collect()
}

fn atx(a: &Matrix, r: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.cols];
    for (i, ri) in r.iter().enumerate() {
        let row = &a.data[i * a.cols..(i + 1) * a.cols];
        for (o, aij) in out.iter_mut().zip(row) {
            *o += ri * aij;
        }
    }
    out
}

/// Largest eigenvalue of a symmetric PSD operator by power iteration.
///
/// Stops when the Rayleigh quotient changes by at most `tol` relative.
pub fn power_iteration(op: impl Fn(&[f64]) -> Vec<f64>, n: usize, tol: f64, max_iter: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut rng = Rng::new(0x9e37_79b9_7f4a_7c15);
    let mut v: Vec<f64> = rng.normal_vec(n);
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let w = op(&v);
        let next = dot(&v, &w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        v = w.iter().map(|x| x / nw).collect();
        if (next - lambda).abs() <= tol * next.abs() {
            return next.max(lambda);
        }
        lambda = next;
    }
    lambda
}

/// Seeded lasso instance `1/2 |A x - y|^2 + lambda |x|_1`.
///
/// `A` is `m x n` with i.i.d. `N(0, 1/m)` entries; `y = A x_true + 0.01 e` for a
/// planted `x_true` with `round(density * n)` (at least one) Gaussian nonzeros.
pub fn make_random_lasso(
    seed: u64,
    n: usize,
    m: usize,
    density: f64,
    lambda: f64,
) -> Result<(QuadraticProblem, NonsmoothSpec)> {
    if n == 0 || m == 0 {
        return Err(Error::Precondition("lasso needs n, m >= 1".into()));
    }
    let mut rng = Rng::new(seed);
    let scale = 1.0 / (m as f64).sqrt();
    let a: Vec<f64> = (0..m * n).map(|_| scale * rng.normal()).collect();
    let a = Matrix::new(m, n, a)?;
    let k = ((density * n as f64).round() as usize).clamp(1, n);
    let mut x_true = vec![0.0; n];
    for i in rng.choose_indices(n, k) {
        x_true[i] = rng.normal();
    }
    let target: Vec<f64> = ax(&a, &x_true).iter().map(|v| v + 0.01 * rng.normal()).collect();
    Ok((QuadraticProblem::least_squares(a, target)?, NonsmoothSpec::l1(lambda)))
}
