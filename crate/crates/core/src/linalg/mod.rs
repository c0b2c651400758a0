//! Dense complex matrix kernels shared by all other modules.
//!
//! Matrices are stored row-major as interleaved `(re, im)` pairs
//! ([`num_complex::Complex64`] is `repr(C)` with `re` followed by `im`), so
//! serialized fixtures are bit-portable. Problem sizes here are desk scale
//! (dimensions below ~40), so every kernel is a straightforward O(n³) dense
//! implementation with no blocking.

mod eig;

pub use eig::{herm_eig, sym_eig, HermEig};

use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the matrix kernels.
#[derive(Debug, Error)]
pub enum LinalgError {
    /// Input expected to be Hermitian deviates beyond tolerance.
    #[error("matrix is not Hermitian: relative deviation {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    /// A Cholesky pivot was non-positive.
    #[error("matrix is not positive definite: pivot {pivot} = {value:.3e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    /// Eigenvalue spread exceeds the positive-definiteness tolerance.
    #[error("{context}: near-singular (min eigenvalue {min_eig:.3e}, max {max_eig:.3e})")]
    NearSingular {
        context: &'static str,
        min_eig: f64,
        max_eig: f64,
    },

    /// An iterative kernel failed to converge within its iteration cap.
    #[error("numerical failure in {0}: iteration cap exceeded")]
    NoConvergence(&'static str),
}

/// Relative positive-definiteness tolerance against the largest eigenvalue.
pub const PD_REL_TOL: f64 = 1e-12;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from a row-major slice; `data.len()` must equal `rows * cols`.
    pub fn from_slice(rows: usize, cols: usize, data: &[Complex64]) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count != rows * cols");
        Self {
            rows,
            cols,
            data: data.to_vec(),
        }
    }

    /// Column vector from a slice.
    pub fn col_vector(v: &[Complex64]) -> Self {
        Self::from_slice(v.len(), 1, v)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "dimension mismatch in matvec");
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self[(i, j)] * v[j])
                    .sum::<Complex64>()
            })
            .collect()
    }

    pub fn col(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn trace(&self) -> Complex64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Inner product `a^H b`.
pub fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Euclidean norm.
pub fn vec_norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Outer product `a b^H`.
pub fn outer(a: &[Complex64], b: &[Complex64]) -> CMatrix {
    CMatrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
}

/// Hermitian matrix; construction symmetrizes so that `A == A^H` holds
/// exactly and diagonal imaginary parts are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    m: CMatrix,
}

impl HermitianMatrix {
    /// Validates Hermitian symmetry within `1e-12` relative, then symmetrizes.
    pub fn new(m: CMatrix) -> Result<Self, LinalgError> {
        assert_eq!(m.rows(), m.cols(), "Hermitian matrix must be square");
        let scale = m.fro_norm().max(1e-300);
        let dev = m.sub(&m.adjoint()).fro_norm() / scale;
        if dev > 1e-12 {
            return Err(LinalgError::NotHermitian { deviation: dev });
        }
        Ok(Self::symmetrized(m))
    }

    /// Forces Hermitian symmetry: `(A + A^H) / 2` with real diagonal.
    pub fn symmetrized(m: CMatrix) -> Self {
        assert_eq!(m.rows(), m.cols(), "Hermitian matrix must be square");
        let dim = m.rows();
        let half = Complex64::new(0.5, 0.0);
        let mut out = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            out[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
            for j in i + 1..dim {
                let z = (m[(i, j)] + m[(j, i)].conj()) * half;
                out[(i, j)] = z;
                out[(j, i)] = z.conj();
            }
        }
        Self { dim, m: out }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            m: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            m: CMatrix::identity(dim),
        }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = CMatrix::zeros(dim, dim);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        Self { dim, m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn add(&self, other: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix {
            dim: self.dim,
            m: self.m.add(&other.m),
        }
    }

    pub fn sub(&self, other: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix {
            dim: self.dim,
            m: self.m.sub(&other.m),
        }
    }

    /// Real scaling preserves Hermitian symmetry.
    pub fn scale(&self, c: f64) -> HermitianMatrix {
        HermitianMatrix {
            dim: self.dim,
            m: self.m.scale(Complex64::new(c, 0.0)),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.m[(i, i)].re).sum()
    }

    /// Quadratic form `x^H A x`, real by symmetry.
    pub fn quad_form(&self, x: &[Complex64]) -> f64 {
        cdot(x, &self.m.matvec(x)).re
    }
}

impl std::ops::Index<(usize, usize)> for HermitianMatrix {
    type Output = Complex64;
    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.m[idx]
    }
}

/// `tr(A B)` for Hermitian `A`, `B`; real by symmetry.
pub fn trace_prod(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    assert_eq!(a.dim(), b.dim());
    let n = a.dim();
    let mut t = 0.0;
    for i in 0..n {
        for j in 0..n {
            t += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    t
}

/// Lower Cholesky factor `L` with `A = L L^H`.
pub fn cholesky(a: &HermitianMatrix) -> Result<CMatrix, LinalgError> {
    let n = a.dim();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `A X = B` for Hermitian positive definite `A` via Cholesky.
pub fn solve_psd(a: &HermitianMatrix, b: &CMatrix) -> Result<CMatrix, LinalgError> {
    assert_eq!(a.dim(), b.rows(), "dimension mismatch in solve_psd");
    let l = cholesky(a)?;
    let n = a.dim();
    let mut x = b.clone();
    // Forward substitution L Y = B.
    for col in 0..x.cols() {
        for i in 0..n {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
        // Back substitution L^H X = Y.
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

/// `tr(A^{-1})` for Hermitian positive definite `A`, via eigenvalues.
pub fn trace_inv(a: &HermitianMatrix) -> Result<f64, LinalgError> {
    let eig = herm_eig(a)?;
    let max_eig = *eig
        .values
        .last()
        .expect("trace_inv of empty matrix");
    let min_eig = eig.values[0];
    if min_eig <= PD_REL_TOL * max_eig.max(0.0) {
        return Err(LinalgError::NearSingular {
            context: "trace_inv",
            min_eig,
            max_eig,
        });
    }
    Ok(eig.values.iter().map(|l| 1.0 / l).sum())
}

/// Any `F` with `F F^H = A` for Hermitian PSD `A` (eigenvalue square root;
/// small negative eigenvalues are clipped to zero).
pub fn psd_factor(a: &HermitianMatrix) -> Result<CMatrix, LinalgError> {
    let eig = herm_eig(a)?;
    let n = a.dim();
    let mut f = CMatrix::zeros(n, n);
    for j in 0..n {
        let s = eig.values[j].max(0.0).sqrt();
        for i in 0..n {
            f[(i, j)] = eig.vectors[(i, j)] * s;
        }
    }
    Ok(f)
}

#[cfg(test)]
pub(crate) mod tests;
