//! The nonsmooth term `g` and its proximal mappings
//! `argmin_x g(x) + 1/2 |x - v|_Q^2`.
//!
//! * [`prox_diag`]: any supported kind, diagonal `Q`, coordinate-wise exact.
//! * [`prox_rank1`]: `Q = T - rho u u^T`, convex separable kinds, exact up to a
//!   scalar root solve.
//! * [`prox_generic`]: any low-rank `Q`, convex kinds, accelerated inner
//!   proximal gradient in the diagonal majorant of `Q`.

use crate::error::{Error, Result};
use crate::metric::{DiagonalMetric, LowRankMetric, Metric, Sign};
use crate::root::{bracket_decreasing, solve_bracketed};
use crate::vector::{check_len, norm2, norm_inf};

#[derive(Debug, Clone, PartialEq)]
pub enum NonsmoothKind {
    Zero,
    L1,
    NonNeg,
    Box { lo: Vec<f64>, hi: Vec<f64> },
    GroupL12 { groups: Vec<Vec<usize>> },
    L0,
}

impl NonsmoothKind {
    pub fn name(&self) -> &'static str {
        match self {
            NonsmoothKind::Zero => "zero",
            NonsmoothKind::L1 => "l1",
            NonsmoothKind::NonNeg => "nonneg",
            NonsmoothKind::Box { .. } => "box",
            NonsmoothKind::GroupL12 { .. } => "group_l12",
            NonsmoothKind::L0 => "l0",
        }
    }
}

/// `g = weight * kind`, restricted to the masked coordinates when a mask is set.
#[derive(Debug, Clone, PartialEq)]
pub struct NonsmoothSpec {
    pub kind: NonsmoothKind,
    pub weight: f64,
    pub mask: Option<Vec<bool>>,
}

impl NonsmoothSpec {
    pub fn zero() -> Self {
        Self { kind: NonsmoothKind::Zero, weight: 0.0, mask: None }
    }

    pub fn l1(lambda: f64) -> Self {
        Self { kind: NonsmoothKind::L1, weight: lambda, mask: None }
    }

    pub fn l0(lambda: f64) -> Self {
        Self { kind: NonsmoothKind::L0, weight: lambda, mask: None }
    }

    pub fn nonneg() -> Self {
        Self { kind: NonsmoothKind::NonNeg, weight: 1.0, mask: None }
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_len(lo.len(), hi.len())?;
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::Precondition("box needs lo <= hi".into()));
        }
        Ok(Self { kind: NonsmoothKind::Box { lo, hi }, weight: 1.0, mask: None })
    }

    pub fn group_l12(lambda: f64, groups: Vec<Vec<usize>>) -> Self {
        Self { kind: NonsmoothKind::GroupL12 { groups }, weight: lambda, mask: None }
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Self {
        self.mask = Some(mask);
        self
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self.kind, NonsmoothKind::L0)
    }

    #[inline]
    fn active(&self, i: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m.get(i).copied().unwrap_or(false))
    }

    /// Coordinate-separable kinds (group norms are not).
    pub fn is_separable(&self) -> bool {
        !matches!(self.kind, NonsmoothKind::GroupL12 { .. })
    }
}

/// `g(x)`, `+inf` outside constraint sets.
pub fn g_value(g: &NonsmoothSpec, x: &[f64]) -> f64 {
    let lam = g.weight;
    match &g.kind {
        NonsmoothKind::Zero => 0.0,
        NonsmoothKind::L1 => lam * x.iter().enumerate().filter(|(i, _)| g.active(*i)).map(|(_, v)| v.abs()).sum::<f64>(),
        NonsmoothKind::L0 => lam * x.iter().enumerate().filter(|(i, v)| g.active(*i) && **v != 0.0).count() as f64,
        NonsmoothKind::NonNeg => {
            if x.iter().enumerate().any(|(i, v)| g.active(i) && *v < 0.0) {
                f64::INFINITY
            } else {
                0.0
            }
        }
        NonsmoothKind::Box { lo, hi } => {
            if x.iter().enumerate().any(|(i, v)| g.active(i) && (*v < lo[i] || *v > hi[i])) {
                f64::INFINITY
            } else {
                0.0
            }
        }
        NonsmoothKind::GroupL12 { groups } => {
            lam * groups.iter().map(|grp| grp.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt()).sum::<f64>()
        }
    }
}

#[inline]
fn soft_threshold(v: f64, thr: f64) -> f64 {
    if v > thr {
        v - thr
    } else if v < -thr {
        v + thr
    } else {
        0.0
    }
}

/// Exact prox in a diagonal metric, coordinate by coordinate.
pub fn prox_diag(g: &NonsmoothSpec, t: &DiagonalMetric, v: &[f64]) -> Vec<f64> {
    let td = t.diag();
    debug_assert_eq!(td.len(), v.len());
    let lam = g.weight;
    match &g.kind {
        NonsmoothKind::Zero => v.to_vec(),
        NonsmoothKind::L1 => v
            .iter()
            .enumerate()
            .map(|(i, &vi)| if g.active(i) { soft_threshold(vi, lam / td[i]) } else { vi })
            .collect(),
        NonsmoothKind::L0 => v
            .iter()
            .enumerate()
            // keep iff 1/2 t v^2 > lambda; ties go to zero
            .map(|(i, &vi)| if !g.active(i) || 0.5 * td[i] * vi * vi > lam { vi } else { 0.0 })
            .collect(),
        NonsmoothKind::NonNeg => {
            v.iter().enumerate().map(|(i, &vi)| if g.active(i) { vi.max(0.0) } else { vi }).collect()
        }
        NonsmoothKind::Box { lo, hi } => v
            .iter()
            .enumerate()
            .map(|(i, &vi)| if g.active(i) { vi.clamp(lo[i], hi[i]) } else { vi })
            .collect(),
        NonsmoothKind::GroupL12 { groups } => {
            let mut x = v.to_vec();
            for grp in groups {
                prox_group(lam, grp, td, v, &mut x);
            }
            x
        }
    }
}

/// `argmin lam |x_G| + 1/2 sum_i t_i (x_i - v_i)^2` over one group.
fn prox_group(lam: f64, grp: &[usize], t: &[f64], v: &[f64], x: &mut [f64]) {
    let tv_norm = grp.iter().map(|&i| (t[i] * v[i]).powi(2)).sum::<f64>().sqrt();
    if tv_norm <= lam {
        grp.iter().for_each(|&i| x[i] = 0.0);
        return;
    }
    let t0 = t[grp[0]];
    if grp.iter().all(|&i| t[i] == t0) {
        let vn = grp.iter().map(|&i| v[i] * v[i]).sum::<f64>().sqrt();
        let shrink = 1.0 - lam / (t0 * vn);
        grp.iter().for_each(|&i| x[i] = shrink * v[i]);
        return;
    }
    // x_i = t_i v_i s / (t_i s + lam) with s = |x_G| solving sum (t_i v_i / (t_i s + lam))^2 = 1
    let mut psi = |s: f64| grp.iter().map(|&i| (t[i] * v[i] / (t[i] * s + lam)).powi(2)).sum::<f64>() - 1.0;
    let hi = grp.iter().map(|&i| v[i] * v[i]).sum::<f64>().sqrt();
    let (f0, f1) = (psi(0.0), psi(hi));
    let s = solve_bracketed(&mut psi, 0.0, f0, hi, f1, 1e-15, 500).x;
    grp.iter().for_each(|&i| x[i] = t[i] * v[i] * s / (t[i] * s + lam));
}

/// Exact prox for `Q = T - rho u u^T` via the scalar equation
/// `phi(a) = u^T (prox_diag(g, T, v + a T^-1 u) - v) - a = 0`.
///
/// `phi` is strictly decreasing for convex separable `g` when `Q` is positive
/// definite, so the root is unique and bracketing always succeeds in exact
/// arithmetic; a failed bracket falls back to [`prox_generic`].
pub fn prox_rank1(g: &NonsmoothSpec, q: &LowRankMetric, v: &[f64]) -> Result<Vec<f64>> {
    check_len(q.dim(), v.len())?;
    match g.kind {
        NonsmoothKind::L0 => return Err(Error::UnsupportedKind("l0")),
        NonsmoothKind::GroupL12 { .. } => return Err(Error::UnsupportedKind("group_l12")),
        _ => {}
    }
    if q.is_diagonal() {
        return Ok(prox_diag(g, &q.base, v));
    }
    if q.rank() != 1 || q.sign != Sign::Minus {
        return Err(Error::Metric("prox_rank1 needs a rank-1 metric of the form T - rho u u^T".into()));
    }
    if !q.is_positive_definite() {
        return Err(Error::Metric("metric is not positive definite".into()));
    }
    if matches!(g.kind, NonsmoothKind::Zero) {
        return Ok(v.to_vec());
    }
    let t = &q.base;
    let s = q.damping.sqrt();
    let u: Vec<f64> = q.factor[0].iter().map(|x| x * s).collect();
    if norm_inf(&u) == 0.0 {
        return Ok(prox_diag(g, t, v));
    }
    let tu = t.apply_inverse(&u);
    let shifted = |a: f64| -> Vec<f64> { v.iter().zip(&tu).map(|(vi, ti)| vi + a * ti).collect() };
    let mut phi = |a: f64| -> f64 {
        let x = prox_diag(g, t, &shifted(a));
        let ux: f64 = u.iter().zip(x.iter().zip(v)).map(|(ui, (xi, vi))| ui * (xi - vi)).sum();
        ux - a
    };
    let start = 1.0 + t.norm_sq(v).sqrt();
    let ftol = 1e-12 * (1.0 + norm2(&u) * norm2(v));
    let Some((a, fa, b, fb)) = bracket_decreasing(&mut phi, start, 100) else {
        return Ok(prox_generic(g, q, v, 1e-13)?.x);
    };
    let root = solve_bracketed(&mut phi, a, fa, b, fb, ftol, 500);
    Ok(prox_diag(g, t, &shifted(root.x)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxOutcome {
    pub x: Vec<f64>,
    /// Max-norm of the inner proximal-gradient fixed-point residual.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Diagonal `S` with `S - Q` positive semidefinite.
fn diagonal_majorant(q: &LowRankMetric) -> DiagonalMetric {
    if q.sign == Sign::Minus || q.is_diagonal() {
        return q.base.clone();
    }
    let mut d = q.base.diag().to_vec();
    for u in &q.factor {
        let l1: f64 = u.iter().map(|x| x.abs()).sum();
        for (di, ui) in d.iter_mut().zip(u) {
            *di += q.damping * ui.abs() * l1;
        }
    }
    DiagonalMetric::new(d).expect("majorant of a positive diagonal stays positive")
}

/// Prox in a general low-rank metric by accelerated proximal gradient on
/// `x -> g(x) + 1/2 |x - v|_Q^2`, stepping in the diagonal majorant of `Q`
/// with gradient-based momentum restarts.
///
/// Hitting the iteration cap is not an error: the achieved residual is
/// reported and `converged` is false.
pub fn prox_generic(g: &NonsmoothSpec, q: &LowRankMetric, v: &[f64], inner_tol: f64) -> Result<ProxOutcome> {
    check_len(q.dim(), v.len())?;
    if q.is_diagonal() {
        return Ok(ProxOutcome { x: prox_diag(g, &q.base, v), residual: 0.0, iterations: 1, converged: true });
    }
    if !g.is_convex() {
        return Err(Error::UnsupportedKind("l0"));
    }
    const MAX_ITERS: usize = 200_000;
    let s = diagonal_majorant(q);
    let step = |z: &[f64]| -> Vec<f64> {
        let d: Vec<f64> = z.iter().zip(v).map(|(a, b)| a - b).collect();
        let grad = s.apply_inverse(&q.apply(&d));
        let w: Vec<f64> = z.iter().zip(&grad).map(|(a, b)| a - b).collect();
        prox_diag(g, &s, &w)
    };
    let mut x = v.to_vec();
    let mut z = x.clone();
    let mut theta = 1.0f64;
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITERS {
        let x_new = step(&z);
        let probe = step(&x_new);
        residual = x_new.iter().zip(&probe).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if residual <= inner_tol {
            return Ok(ProxOutcome { x: x_new, residual, iterations: it, converged: true });
        }
        // gradient-based restart: drop momentum once it points uphill
        let uphill: f64 = z.iter().zip(&x_new).zip(&x).map(|((zi, xn), xi)| (zi - xn) * (xn - xi)).sum();
        if uphill > 0.0 {
            theta = 1.0;
            z = x_new.clone();
            x = x_new;
            continue;
        }
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let mom = (theta - 1.0) / theta_next;
        z = x_new.iter().zip(&x).map(|(a, b)| a + mom * (a - b)).collect();
        theta = theta_next;
        x = x_new;
    }
    Ok(ProxOutcome { x, residual, iterations: MAX_ITERS, converged: false })
}

/// Prox in `Q`, dispatching to the cheapest exact route.
pub fn prox_metric(g: &NonsmoothSpec, q: &LowRankMetric, v: &[f64]) -> Result<Vec<f64>> {
    if q.is_diagonal() {
        return Ok(prox_diag(g, &q.base, v));
    }
    if q.rank() == 1 && q.sign == Sign::Minus && g.is_separable() && g.is_convex() {
        return prox_rank1(g, q, v);
    }
    Ok(prox_generic(g, q, v, 1e-13)?.x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values() {
        assert_eq!(g_value(&NonsmoothSpec::l1(1.0), &[1.0, -2.0]), 3.0);
        assert_eq!(g_value(&NonsmoothSpec::nonneg(), &[-1.0, 0.0]), f64::INFINITY);
        assert_eq!(g_value(&NonsmoothSpec::l0(2.0), &[0.0, 5.0, 0.0]), 2.0);
        let masked = NonsmoothSpec::l1(1.0).with_mask(vec![true, false]);
        assert_eq!(g_value(&masked, &[1.0, -2.0]), 1.0);
    }

    #[test]
    fn diagonal_prox_examples() {
        let id = DiagonalMetric::scalar(2, 1.0);
        assert_eq!(prox_diag(&NonsmoothSpec::l1(1.0), &id, &[2.0, -0.5]), vec![1.0, 0.0]);
        assert_eq!(prox_diag(&NonsmoothSpec::nonneg(), &id, &[-3.0, 4.0]), vec![0.0, 4.0]);
        assert_eq!(prox_diag(&NonsmoothSpec::l0(1.0), &id, &[2.0, 1.0]), vec![2.0, 0.0]);
        let masked = NonsmoothSpec::l1(1.0).with_mask(vec![false, true]);
        assert_eq!(prox_diag(&masked, &id, &[0.5, 0.5]), vec![0.5, 0.0]);
    }

    #[test]
    fn l0_tie_goes_to_zero() {
        let t = DiagonalMetric::scalar(1, 2.0);
        // 1/2 * 2 * 1^2 = 1 = lambda
        assert_eq!(prox_diag(&NonsmoothSpec::l0(1.0), &t, &[1.0]), vec![0.0]);
    }

    #[test]
    fn group_prox_matches_uniform_closed_form() {
        let g = NonsmoothSpec::group_l12(1.0, vec![vec![0, 1]]);
        let x = prox_diag(&g, &DiagonalMetric::scalar(2, 1.0), &[3.0, 4.0]);
        assert!((x[0] - 2.4).abs() < 1e-15 && (x[1] - 3.2).abs() < 1e-15);
        // nonuniform metric: check optimality t_i (x_i - v_i) + lam x_i / |x| = 0
        let t = DiagonalMetric::new(vec![1.0, 3.0]).unwrap();
        let v = [3.0, 4.0];
        let x = prox_diag(&g, &t, &v);
        let nx = norm2(&x);
        for i in 0..2 {
            assert!((t.diag()[i] * (x[i] - v[i]) + x[i] / nx).abs() < 1e-12);
        }
        assert_eq!(prox_diag(&g, &t, &[0.1, 0.1]), vec![0.0, 0.0]);
    }

    #[test]
    fn rank1_degenerate_cases() {
        let t = DiagonalMetric::scalar(3, 2.0);
        let q0 = LowRankMetric::new(t.clone(), vec![vec![0.0; 3]], Sign::Minus, 1.0).unwrap();
        let v = [1.5, -0.2, 0.7];
        assert_eq!(prox_rank1(&NonsmoothSpec::l1(1.0), &q0, &v).unwrap(), prox_diag(&NonsmoothSpec::l1(1.0), &t, &v));
        let q = LowRankMetric::new(t, vec![vec![1.0, 0.0, 0.5]], Sign::Minus, 1.0).unwrap();
        assert_eq!(prox_rank1(&NonsmoothSpec::zero(), &q, &v).unwrap(), v.to_vec());
        assert!(matches!(prox_rank1(&NonsmoothSpec::l0(1.0), &q, &v), Err(Error::UnsupportedKind("l0"))));
    }

    #[test]
    fn generic_on_diagonal_is_one_step() {
        let t = DiagonalMetric::new(vec![1.0, 2.0, 4.0]).unwrap();
        let q = LowRankMetric::diagonal(t.clone());
        let v = [3.0, -0.1, 0.4];
        let g = NonsmoothSpec::l1(0.5);
        let out = prox_generic(&g, &q, &v, 1e-12).unwrap();
        assert_eq!(out.x, prox_diag(&g, &t, &v));
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn generic_with_zero_g_returns_anchor() {
        let t = DiagonalMetric::scalar(3, 2.0);
        let q = LowRankMetric::new(t, vec![vec![1.0, 0.2, 0.5]], Sign::Minus, 1.0).unwrap();
        let v = [0.3, 1.0, -2.0];
        let out = prox_generic(&NonsmoothSpec::zero(), &q, &v, 1e-12).unwrap();
        assert!(out.converged);
        assert!(out.x.iter().zip(&v).all(|(a, b)| (a - b).abs() <= 1e-12));
    }

    #[test]
    fn rank1_and_generic_agree() {
        let t = DiagonalMetric::new(vec![2.0, 3.0, 2.5, 4.0]).unwrap();
        let q = LowRankMetric::new(t, vec![vec![1.0, -0.5, 0.8, 0.3]], Sign::Minus, 0.9).unwrap();
        let v = [1.0, -2.0, 0.1, 0.6];
        for g in [NonsmoothSpec::l1(0.7), NonsmoothSpec::nonneg(), NonsmoothSpec::boxed(vec![-0.5; 4], vec![0.5; 4]).unwrap()] {
            let a = prox_rank1(&g, &q, &v).unwrap();
            let b = prox_generic(&g, &q, &v, 1e-13).unwrap();
            assert!(b.converged, "{:?} {} {}", g.kind, b.residual, b.iterations);
            for (x, y) in a.iter().zip(&b.x) {
                assert!((x - y).abs() < 1e-9, "{} vs {}", x, y);
            }
        }
    }
}
