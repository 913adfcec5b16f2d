//! Independent reference computations used to validate the fast paths:
//! finite differences, scalar scans, brute-force grids and dense algebra.
//! Nothing here is used by the solvers themselves.

use crate::metric::DiagonalMetric;
use crate::problem::SmoothObjective;
use crate::prox::{g_value, NonsmoothSpec};
use crate::vector::dot;

/// Central differences of `f` along the listed coordinates.
pub fn finite_diff_gradient(f: &dyn SmoothObjective, x: &[f64], coords: &[usize], h_rel: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    coords
        .iter()
        .map(|&i| {
            let h = h_rel * (1.0 + x[i].abs());
            xp[i] = x[i] + h;
            let fp = f.value(&xp);
            xp[i] = x[i] - h;
            let fm = f.value(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// `|g_S - fd_S| / |g_S|` over the coordinate subset `S`, with `g` the
/// analytic gradient and `fd` central differences.
pub fn gradient_check(f: &dyn SmoothObjective, x: &[f64], coords: &[usize], h_rel: f64) -> f64 {
    let grad = f.gradient(x);
    let fd = finite_diff_gradient(f, x, coords, h_rel);
    let (mut num, mut den) = (0.0, 0.0);
    for (&i, v) in coords.iter().zip(&fd) {
        num += (grad[i] - v).powi(2);
        den += grad[i] * grad[i];
    }
    if den == 0.0 {
        return num.sqrt();
    }
    (num / den).sqrt()
}

/// Golden-section minimization of a unimodal `phi` on `[a, b]`.
pub fn golden_section(mut phi: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (phi(c), phi(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = phi(d);
        }
    }
    0.5 * (a + b)
}

/// Coarse scan of `[lo, hi]` followed by golden-section refinement around the best sample.
pub fn scan_minimize(mut phi: impl FnMut(f64) -> f64, lo: f64, hi: f64, n_scan: usize, tol: f64) -> f64 {
    let h = (hi - lo) / n_scan as f64;
    let best = (0..=n_scan)
        .map(|i| lo + h * i as f64)
        .map(|s| (s, phi(s)))
        .fold((lo, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc });
    golden_section(phi, best.0 - h, best.0 + h, tol)
}

/// Solves the dense system `A z = b` (row-major) by Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut z = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))?;
        if m[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            z.swap(col, piv);
        }
        for row in col + 1..n {
            let factor = m[row * n + col] / m[col * n + col];
            if factor != 0.0 {
                for k in col..n {
                    m[row * n + k] -= factor * m[col * n + k];
                }
                z[row] -= factor * z[col];
            }
        }
    }
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row * n + k] * z[k]).sum();
        z[row] = (z[row] - s) / m[row * n + row];
    }
    Some(z)
}

/// Dense `Q = T - W (D^T W)^-1 W^T`, `W = T D - Y`, built entry by entry.
pub fn dense_q(t: &DiagonalMetric, d: &[Vec<f64>], y: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = t.diag().len();
    let r = d.len();
    let w: Vec<Vec<f64>> = d
        .iter()
        .zip(y)
        .map(|(dc, yc)| dc.iter().zip(yc).zip(t.diag()).map(|((a, b), ti)| ti * a - b).collect())
        .collect();
    let mut gram = vec![0.0; r * r];
    for i in 0..r {
        for j in 0..r {
            gram[i * r + j] = dot(&d[i], &w[j]);
        }
    }
    // G^-1 column by column
    let mut ginv = vec![0.0; r * r];
    for j in 0..r {
        let mut e = vec![0.0; r];
        e[j] = 1.0;
        let col = dense_solve(&gram, r, &e)?;
        for i in 0..r {
            ginv[i * r + j] = col[i];
        }
    }
    let mut q = vec![0.0; n * n];
    for a in 0..n {
        q[a * n + a] = t.diag()[a];
        for b in 0..n {
            let mut s = 0.0;
            for i in 0..r {
                for j in 0..r {
                    s += w[i][a] * ginv[i * r + j] * w[j][b];
                }
            }
            q[a * n + b] -= s;
        }
    }
    Some(q)
}

/// Brute-force prox in a dense 2x2 metric: coarse-to-fine grid search of
/// `g(x) + 1/2 (x - v)^T Q (x - v)` ending at grid spacing `resolution`.
pub fn prox_grid_2d(g: &NonsmoothSpec, q: &[f64; 4], v: &[f64; 2], half_width: f64, resolution: f64) -> [f64; 2] {
    let obj = |x: [f64; 2]| {
        let d = [x[0] - v[0], x[1] - v[1]];
        let quad = d[0] * (q[0] * d[0] + q[1] * d[1]) + d[1] * (q[2] * d[0] + q[3] * d[1]);
        g_value(g, &x) + 0.5 * quad
    };
    const STEPS: i64 = 40;
    let mut center = *v;
    let mut hw = half_width;
    loop {
        let h = (hw / STEPS as f64).max(resolution);
        let mut best = (center, obj(center));
        for i in -STEPS..=STEPS {
            for j in -STEPS..=STEPS {
                let p = [center[0] + h * i as f64, center[1] + h * j as f64];
                let val = obj(p);
                if val < best.1 {
                    best = (p, val);
                }
            }
        }
        center = best.0;
        if h <= resolution {
            return center;
        }
        hw = (hw / 4.0).max(resolution * STEPS as f64);
    }
}

/// `|f(x) - f(y) - <grad f(y), x - y>| - L/2 |x - y|^2`; positive values violate the descent lemma.
pub fn descent_lemma_excess(f: &dyn SmoothObjective, l: f64, x: &[f64], y: &[f64]) -> f64 {
    let (fy, gy) = f.value_grad(y);
    let fx = f.value(x);
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    (fx - fy - dot(&gy, &diff)).abs() - 0.5 * l * dot(&diff, &diff)
}
