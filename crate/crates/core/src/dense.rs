//! Small dense kernels for the R x R systems that appear in low-rank metrics.
//! R is the number of extrapolation directions, so these are tiny.

use crate::error::{Error, Result};

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Square {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Square {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn symmetrize(&mut self) {
        for i in 0..self.n {
            for j in 0..i {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                self.set(i, j, v);
                self.set(j, i, v);
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum()).collect()
    }
}

/// Lower Cholesky factor `L` with `A = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Square,
}

impl Cholesky {
    /// Fails when a squared pivot drops to `pivot_tol * (1 + max |a_ii|)` or below.
    pub fn factor(a: &Square, pivot_tol: f64) -> Result<Self> {
        let n = a.n;
        let scale = 1.0 + (0..n).fold(0.0f64, |m, i| m.max(a.get(i, i).abs()));
        let mut l = Square::zeros(n);
        for j in 0..n {
            let mut d = a.get(j, j);
            for k in 0..j {
                d -= l.get(j, k) * l.get(j, k);
            }
            if !(d > pivot_tol * scale) {
                return Err(Error::Singular(n));
            }
            let djj = d.sqrt();
            l.set(j, j, djj);
            for i in j + 1..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / djj);
            }
        }
        Ok(Self { l })
    }

    pub fn factor_l(&self) -> &Square {
        &self.l
    }

    /// Solves `L z = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.n;
        let mut z = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                z[i] -= self.l.get(i, k) * z[k];
            }
            z[i] /= self.l.get(i, i);
        }
        z
    }

    /// Solves `L^T x = z`.
    pub fn backward(&self, z: &[f64]) -> Vec<f64> {
        let n = self.l.n;
        let mut x = z.to_vec();
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.l.get(k, i) * x[k];
            }
            x[i] /= self.l.get(i, i);
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let a = Square { n: 2, data: vec![4.0, 2.0, 2.0, 3.0] };
        let c = Cholesky::factor(&a, 1e-14).unwrap();
        let x = c.solve(&[2.0, 1.0]);
        let r = a.matvec(&x);
        assert!((r[0] - 2.0).abs() < 1e-14 && (r[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_singular_and_indefinite() {
        let a = Square { n: 2, data: vec![1.0, 1.0, 1.0, 1.0] };
        assert!(Cholesky::factor(&a, 1e-12).is_err());
        let b = Square { n: 1, data: vec![-1.0] };
        assert!(Cholesky::factor(&b, 1e-12).is_err());
    }
}
