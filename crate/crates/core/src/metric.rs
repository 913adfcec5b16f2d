//! Quadratic-form metrics: positive diagonals and signed low-rank corrections.
//!
//! The metric of the joint extrapolation step for quadratic `f` is
//! `Q = T - U^T U`, where `U^T U = (TD - Y) [D^T (TD - Y)]^-1 (TD - Y)^T` and
//! `Y = H D`. `Q` agrees with `H` on `span(D)` and with `T` on `ker(D^T)`.
//! Everything here works with R x R dense algebra and O(N R) vector work;
//! no N x N matrix is ever formed.

use crate::dense::{Cholesky, Square};
use crate::error::{Error, Result};
use crate::vector::{check_len, dot, norm2};

/// Tolerance on the normalized Gram determinant of `D` below which its
/// columns are treated as linearly dependent.
pub const RANK_TOL: f64 = 1e-12;

/// Relative curvature threshold of the SR1 safeguard.
pub const SR1_EPS: f64 = 1e-8;

/// Relative pivot tolerance for the R x R positive-definiteness checks.
pub const PIVOT_TOL: f64 = 1e-12;

pub trait Metric {
    fn dim(&self) -> usize;

    fn apply(&self, v: &[f64]) -> Vec<f64>;

    /// `a^T M b`.
    fn inner(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_len(self.dim(), a.len())?;
        check_len(self.dim(), b.len())?;
        Ok(dot(a, &self.apply(b)))
    }

    fn norm_sq(&self, a: &[f64]) -> f64 {
        dot(a, &self.apply(a))
    }
}

/// Free-function form of [`Metric::inner`].
pub fn metric_inner(m: &dyn Metric, a: &[f64], b: &[f64]) -> Result<f64> {
    m.inner(a, b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalMetric {
    diag: Vec<f64>,
}

impl DiagonalMetric {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if diag.iter().all(|d| *d > 0.0 && d.is_finite()) {
            Ok(Self { diag })
        } else {
            Err(Error::Metric("diagonal entries must be positive and finite".into()))
        }
    }

    /// `t I` in dimension `n`. Panics unless `t > 0`.
    pub fn scalar(n: usize, t: f64) -> Self {
        assert!(t > 0.0 && t.is_finite(), "scalar metric needs t > 0, got {t}");
        Self { diag: vec![t; n] }
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn max_entry(&self) -> f64 {
        self.diag.iter().copied().fold(0.0, f64::max)
    }

    pub fn apply_inverse(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.diag).map(|(x, t)| x / t).collect()
    }

    /// Every entry multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self { diag: self.diag.iter().map(|t| t * s).collect() }
    }
}

impl Metric for DiagonalMetric {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.diag).map(|(x, t)| x * t).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `Q = T + sign * rho * U^T U` with `U` of shape R x N (stored by rows).
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankMetric {
    pub base: DiagonalMetric,
    pub factor: Vec<Vec<f64>>,
    pub sign: Sign,
    pub damping: f64,
}

impl LowRankMetric {
    /// Rank-0 metric equal to `base`.
    pub fn diagonal(base: DiagonalMetric) -> Self {
        Self { base, factor: Vec::new(), sign: Sign::Minus, damping: 1.0 }
    }

    pub fn new(base: DiagonalMetric, factor: Vec<Vec<f64>>, sign: Sign, damping: f64) -> Result<Self> {
        for row in &factor {
            check_len(base.dim(), row.len())?;
        }
        if !(0.0..=1.0).contains(&damping) {
            return Err(Error::Metric(format!("damping must lie in [0, 1], got {damping}")));
        }
        Ok(Self { base, factor, sign, damping })
    }

    /// Same metric with the correction scaled by `rho`.
    pub fn with_damping(mut self, rho: f64) -> Self {
        self.damping = rho;
        self
    }

    pub fn rank(&self) -> usize {
        self.factor.len()
    }

    /// True when the correction vanishes (rank 0 or zero damping).
    pub fn is_diagonal(&self) -> bool {
        self.factor.is_empty() || self.damping == 0.0
    }

    fn signed_damping(&self) -> f64 {
        self.sign.factor() * self.damping
    }

    /// `I + sign * rho * U T^-1 U^T`.
    fn capacitance(&self) -> Square {
        let r = self.rank();
        let s = self.signed_damping();
        let scaled: Vec<Vec<f64>> = self.factor.iter().map(|u| self.base.apply_inverse(u)).collect();
        let mut c = Square::identity(r);
        for i in 0..r {
            for j in 0..r {
                c.data[i * r + j] += s * dot(&self.factor[i], &scaled[j]);
            }
        }
        c.symmetrize();
        c
    }

    /// `Q^-1 v` by the Sherman-Morrison-Woodbury identity.
    pub fn apply_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), v.len())?;
        let tv = self.base.apply_inverse(v);
        if self.is_diagonal() {
            return Ok(tv);
        }
        let chol = Cholesky::factor(&self.capacitance(), PIVOT_TOL).map_err(|_| Error::Singular(self.rank()))?;
        let utv: Vec<f64> = self.factor.iter().map(|u| dot(u, &tv)).collect();
        let w = chol.solve(&utv);
        let s = self.signed_damping();
        let mut correction = vec![0.0; v.len()];
        for (u, wk) in self.factor.iter().zip(&w) {
            for (c, ui) in correction.iter_mut().zip(u) {
                *c += wk * ui;
            }
        }
        let tc = self.base.apply_inverse(&correction);
        Ok(tv.iter().zip(&tc).map(|(a, b)| a - s * b).collect())
    }

    /// Certifies `Q` positive definite through the R x R capacitance matrix.
    pub fn is_positive_definite(&self) -> bool {
        match self.sign {
            Sign::Plus => true,
            Sign::Minus if self.is_diagonal() => true,
            Sign::Minus => Cholesky::factor(&self.capacitance(), PIVOT_TOL).is_ok(),
        }
    }

    /// `Q e_i` for all i, as a dense row-major matrix (validation only).
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.apply(&e);
            e[j] = 0.0;
            for i in 0..n {
                out[i * n + j] = col[i];
            }
        }
        out
    }
}

impl Metric for LowRankMetric {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = self.base.apply(v);
        let s = self.signed_damping();
        for u in &self.factor {
            let c = s * dot(u, v);
            for (o, ui) in out.iter_mut().zip(u) {
                *o += c * ui;
            }
        }
        out
    }
}

/// Directions `D` (columns) with the Hessian applied to them, `Y = H D`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianOnSpan {
    pub d: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
}

impl HessianOnSpan {
    pub fn new(d: Vec<Vec<f64>>, y: Vec<Vec<f64>>) -> Result<Self> {
        check_len(d.len(), y.len())?;
        if let Some(first) = d.first() {
            let n = first.len();
            for c in d.iter().chain(&y) {
                check_len(n, c.len())?;
            }
        }
        Ok(Self { d, y })
    }

    pub fn rank(&self) -> usize {
        self.d.len()
    }

    /// Normalized Gram determinant check on the columns of `D`.
    pub fn columns_independent(&self) -> bool {
        let r = self.rank();
        let norms: Vec<f64> = self.d.iter().map(|c| norm2(c)).collect();
        if norms.iter().any(|n| !(*n > 0.0)) {
            return false;
        }
        let mut g = Square::zeros(r);
        for i in 0..r {
            for j in 0..r {
                g.set(i, j, dot(&self.d[i], &self.d[j]) / (norms[i] * norms[j]));
            }
        }
        match Cholesky::factor(&g, 0.0) {
            Ok(c) => {
                let l = c.factor_l();
                let det: f64 = (0..r).map(|i| l.get(i, i) * l.get(i, i)).product();
                det >= RANK_TOL
            }
            Err(_) => false,
        }
    }
}

/// `Q = T - (TD - Y) [D^T (TD - Y)]^-1 (TD - Y)^T` in factored form.
pub fn build_q_rank_r(t: &DiagonalMetric, span: &HessianOnSpan) -> Result<LowRankMetric> {
    let r = span.rank();
    if r == 0 {
        return Ok(LowRankMetric::diagonal(t.clone()));
    }
    for c in &span.d {
        check_len(t.dim(), c.len())?;
    }
    if !span.columns_independent() {
        return Err(Error::Metric("extrapolation directions are linearly dependent".into()));
    }
    let w: Vec<Vec<f64>> = span
        .d
        .iter()
        .zip(&span.y)
        .map(|(d, y)| t.apply(d).iter().zip(y).map(|(a, b)| a - b).collect())
        .collect();
    let mut gram = Square::zeros(r);
    for i in 0..r {
        for j in 0..r {
            gram.set(i, j, dot(&span.d[i], &w[j]));
        }
    }
    gram.symmetrize();
    let chol = Cholesky::factor(&gram, PIVOT_TOL)
        .map_err(|_| Error::Metric("D^T (T D - Y) is not positive definite".into()))?;
    let n = t.dim();
    let mut factor = vec![vec![0.0; n]; r];
    let mut col = vec![0.0; r];
    for i in 0..n {
        for k in 0..r {
            col[k] = w[k][i];
        }
        let z = chol.forward(&col);
        for k in 0..r {
            factor[k][i] = z[k];
        }
    }
    LowRankMetric::new(t.clone(), factor, Sign::Minus, 1.0)
}

/// Zero-memory SR1 metric `T + (y - Td)(y - Td)^T / <d, y - Td>`.
///
/// Only the negative-curvature-denominator branch is accepted, where the
/// update reads `T - u u^T`; any other case returns `T` unchanged.
pub fn sr1_memory_metric(t: &DiagonalMetric, d: &[f64], y: &[f64]) -> LowRankMetric {
    let r: Vec<f64> = y.iter().zip(t.apply(d)).map(|(a, b)| a - b).collect();
    let s = dot(d, &r);
    let bound = SR1_EPS * norm2(d) * norm2(&r);
    if !(s < -bound) || !s.is_finite() {
        return LowRankMetric::diagonal(t.clone());
    }
    let scale = 1.0 / (-s).sqrt();
    let u: Vec<f64> = r.iter().map(|v| v * scale).collect();
    LowRankMetric { base: t.clone(), factor: vec![u], sign: Sign::Minus, damping: 1.0 }
}
