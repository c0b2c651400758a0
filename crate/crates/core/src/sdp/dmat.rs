//! Small dense real matrices for the interior-point solver.

use crate::linalg::{sym_eig, LinalgError};

/// Dense real matrix, row-major. Solver blocks are symmetric throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct DMat {
    pub n: usize,
    pub a: Vec<f64>,
}

impl DMat {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![0.0; n * n] }
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = c;
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[i * self.n + j]
    }

    pub fn mul(&self, other: &DMat) -> DMat {
        let n = self.n;
        let mut out = DMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let v = self.a[i * n + k];
                if v == 0.0 {
                    continue;
                }
                let row = &other.a[k * n..(k + 1) * n];
                let dst = &mut out.a[i * n..(i + 1) * n];
                for (d, &r) in dst.iter_mut().zip(row) {
                    *d += v * r;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                self.a[i * n..(i + 1) * n]
                    .iter()
                    .zip(v)
                    .map(|(&aij, &vj)| aij * vj)
                    .sum()
            })
            .collect()
    }

    pub fn add_scaled(&mut self, other: &DMat, c: f64) {
        for (d, &s) in self.a.iter_mut().zip(&other.a) {
            *d += c * s;
        }
    }

    pub fn scale_in_place(&mut self, c: f64) {
        for d in &mut self.a {
            *d *= c;
        }
    }

    pub fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in i + 1..n {
                let v = 0.5 * (self.a[i * n + j] + self.a[j * n + i]);
                self.a[i * n + j] = v;
                self.a[j * n + i] = v;
            }
        }
    }

    /// `tr(self * other)` assuming both symmetric.
    pub fn inner_sym(&self, other: &DMat) -> f64 {
        self.a.iter().zip(&other.a).map(|(&x, &y)| x * y).sum()
    }

    pub fn fro_norm(&self) -> f64 {
        self.a.iter().map(|&x| x * x).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.a[i * self.n + i]).sum()
    }

    /// Eigendecomposition of a symmetric matrix (ascending).
    pub fn eig(&self) -> Result<(Vec<f64>, DMat), LinalgError> {
        let (vals, vecs) = sym_eig(self.n, &self.a)?;
        Ok((vals, DMat { n: self.n, a: vecs }))
    }

    /// `U f(D) U^T` given the eigendecomposition of `self`.
    pub fn spectral_map(vals: &[f64], vecs: &DMat, f: impl Fn(f64) -> f64) -> DMat {
        let n = vecs.n;
        let mut scaled = DMat::zeros(n);
        // scaled = U f(D)
        for i in 0..n {
            for j in 0..n {
                scaled.a[i * n + j] = vecs.a[i * n + j] * f(vals[j]);
            }
        }
        // out = scaled U^T
        let mut out = DMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += scaled.a[i * n + k] * vecs.a[j * n + k];
                }
                out.a[i * n + j] = s;
            }
        }
        out.symmetrize();
        out
    }

    /// Lower Cholesky factor; `None` when a pivot is non-positive.
    pub fn cholesky(&self) -> Option<DMat> {
        let n = self.n;
        let mut l = DMat::zeros(n);
        for j in 0..n {
            let mut d = self.a[j * n + j];
            for k in 0..j {
                d -= l.a[j * n + k] * l.a[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let ljj = d.sqrt();
            l.a[j * n + j] = ljj;
            for i in j + 1..n {
                let mut s = self.a[i * n + j];
                for k in 0..j {
                    s -= l.a[i * n + k] * l.a[j * n + k];
                }
                l.a[i * n + j] = s / ljj;
            }
        }
        Some(l)
    }

    /// Solves `L L^T x = rhs` in place given the lower factor `L`.
    pub fn chol_solve(l: &DMat, rhs: &mut [f64]) {
        let n = l.n;
        for i in 0..n {
            let mut s = rhs[i];
            for k in 0..i {
                s -= l.a[i * n + k] * rhs[k];
            }
            rhs[i] = s / l.a[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for k in i + 1..n {
                s -= l.a[k * n + i] * rhs[k];
            }
            rhs[i] = s / l.a[i * n + i];
        }
    }

    /// `L^{-1} B L^{-T}` for lower-triangular `L` (used for cone step lengths).
    pub fn two_sided_tri_solve(l: &DMat, b: &DMat) -> DMat {
        let n = l.n;
        let mut m = b.clone();
        // Forward solve L Y = B (column-wise on rows of m).
        for col in 0..n {
            for i in 0..n {
                let mut s = m.a[i * n + col];
                for k in 0..i {
                    s -= l.a[i * n + k] * m.a[k * n + col];
                }
                m.a[i * n + col] = s / l.a[i * n + i];
            }
        }
        // Now solve Z L^T = Y  =>  for each row: L z^T = y^T.
        for row in 0..n {
            for i in 0..n {
                let mut s = m.a[row * n + i];
                for k in 0..i {
                    s -= l.a[i * n + k] * m.a[row * n + k];
                }
                m.a[row * n + i] = s / l.a[i * n + i];
            }
        }
        m
    }
}
