//! Complex Hermitian layer over the real SDP solver.
//!
//! An `n x n` Hermitian block maps to the `2n x 2n` real symmetric embedding
//! `[[Re A, -Im A], [Im A, Re A]]`. Traces double under the map
//! (`tr embed(A) = 2 tr A`), so constraint right-hand sides and free-scalar
//! coefficients are multiplied by 2 on the way in and the objective is
//! halved on the way out; with that convention every objective/constraint
//! value is preserved exactly. Solutions are de-embedded by averaging the
//! two real copies, and the residual "skew" of that averaging is reported
//! per block.

use num_complex::Complex64;

use crate::linalg::{CMatrix, HermitianMatrix};

use super::{Coeff, Constraint, IterStat, SdpError, SdpProblem, SdpStatus, Sense};

/// Hermitian coefficient matrix on one complex block.
#[derive(Debug, Clone)]
pub enum HermCoeff {
    /// Upper-triangle triplets `(p, q, v)` with `p <= q`; `A[q][p]` is the
    /// conjugate mirror. Diagonal values must be real.
    Sparse(Vec<(usize, usize, Complex64)>),
    /// Weighted rank-one sum `sum_r lambda_r z_r z_r^H`.
    Rank(Vec<(f64, Vec<Complex64>)>),
}

impl HermCoeff {
    pub fn identity(dim: usize) -> Self {
        HermCoeff::Sparse((0..dim).map(|i| (i, i, Complex64::ONE)).collect())
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        HermCoeff::Sparse((0..dim).map(|i| (i, i, Complex64::new(c, 0.0))).collect())
    }

    /// Dense Hermitian matrix as a rank decomposition via its
    /// eigendecomposition is overkill here; sparse triplets cover it.
    pub fn from_matrix(a: &HermitianMatrix) -> Self {
        let n = a.dim();
        let mut ts = Vec::new();
        for p in 0..n {
            for q in p..n {
                let v = a[(p, q)];
                if v != Complex64::ZERO {
                    ts.push((p, q, v));
                }
            }
        }
        HermCoeff::Sparse(ts)
    }

    /// `<A, X> = tr(A X)`, real for Hermitian `A`, `X`.
    pub fn apply(&self, x: &HermitianMatrix) -> f64 {
        match self {
            HermCoeff::Sparse(ts) => {
                let mut s = 0.0;
                for &(p, q, v) in ts {
                    if p == q {
                        s += v.re * x[(p, p)].re;
                    } else {
                        // v * X[q][p] + conj(v) * X[p][q] = 2 Re(v * X[q][p])
                        s += 2.0 * (v * x[(q, p)]).re;
                    }
                }
                s
            }
            HermCoeff::Rank(terms) => terms
                .iter()
                .map(|(lam, z)| lam * x.quad_form(z))
                .sum(),
        }
    }

    pub(crate) fn embed(&self, n: usize) -> Coeff {
        match self {
            HermCoeff::Sparse(ts) => {
                let mut out = Vec::with_capacity(ts.len() * 4);
                for &(p, q, v) in ts {
                    if p == q {
                        out.push((p, p, v.re));
                        out.push((p + n, p + n, v.re));
                    } else {
                        if v.re != 0.0 {
                            out.push((p, q, v.re));
                            out.push((p + n, q + n, v.re));
                        }
                        if v.im != 0.0 {
                            out.push((p, q + n, -v.im));
                            out.push((q, p + n, v.im));
                        }
                    }
                }
                Coeff::Sparse(out)
            }
            HermCoeff::Rank(terms) => {
                let mut out = Vec::with_capacity(terms.len() * 2);
                for (lam, z) in terms {
                    let mut u = Vec::with_capacity(2 * n);
                    let mut w = Vec::with_capacity(2 * n);
                    for zi in z {
                        u.push(zi.re);
                        w.push(-zi.im);
                    }
                    for zi in z {
                        u.push(zi.im);
                        w.push(zi.re);
                    }
                    out.push((*lam, u));
                    out.push((*lam, w));
                }
                Coeff::Rank(out)
            }
        }
    }

    fn validate(&self, dim: usize) -> Result<(), SdpError> {
        match self {
            HermCoeff::Sparse(ts) => {
                for &(p, q, v) in ts {
                    if p > q || q >= dim || !v.re.is_finite() || !v.im.is_finite() {
                        return Err(SdpError::BadCoefficient);
                    }
                    if p == q && v.im != 0.0 {
                        return Err(SdpError::BadCoefficient);
                    }
                }
            }
            HermCoeff::Rank(terms) => {
                for (lam, z) in terms {
                    if z.len() != dim || !lam.is_finite() {
                        return Err(SdpError::BadCoefficient);
                    }
                    if z.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                        return Err(SdpError::BadCoefficient);
                    }
                }
            }
        }
        Ok(())
    }
}

/// One scalar constraint over Hermitian blocks and free scalars.
#[derive(Debug, Clone)]
pub struct HermConstraint {
    pub terms: Vec<(usize, HermCoeff)>,
    pub free_terms: Vec<(usize, f64)>,
    pub rhs: f64,
    pub sense: Sense,
}

impl HermConstraint {
    pub fn eq(rhs: f64) -> Self {
        Self {
            terms: vec![],
            free_terms: vec![],
            rhs,
            sense: Sense::Eq,
        }
    }

    pub fn ge(rhs: f64) -> Self {
        Self {
            terms: vec![],
            free_terms: vec![],
            rhs,
            sense: Sense::Ge,
        }
    }

    pub fn with_term(mut self, block: usize, coeff: HermCoeff) -> Self {
        self.terms.push((block, coeff));
        self
    }

    pub fn with_free(mut self, idx: usize, v: f64) -> Self {
        self.free_terms.push((idx, v));
        self
    }
}

/// Hermitian-valued SDP (minimization).
#[derive(Debug, Clone, Default)]
pub struct HermSdpProblem {
    pub blocks: Vec<(String, usize)>,
    pub free_vars: usize,
    pub objective: Vec<(usize, HermCoeff)>,
    pub objective_free: Vec<f64>,
    pub constraints: Vec<HermConstraint>,
}

impl HermSdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, label: impl Into<String>, dim: usize) -> usize {
        self.blocks.push((label.into(), dim));
        self.blocks.len() - 1
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        for (_, d) in &self.blocks {
            if *d == 0 {
                return Err(SdpError::EmptyBlock);
            }
        }
        let check = |terms: &[(usize, HermCoeff)]| -> Result<(), SdpError> {
            for (b, coeff) in terms {
                let dim = self.blocks.get(*b).ok_or(SdpError::BadBlockIndex)?.1;
                coeff.validate(dim)?;
            }
            Ok(())
        };
        check(&self.objective)?;
        for c in &self.constraints {
            check(&c.terms)?;
        }
        Ok(())
    }
}

/// Solution in complex terms; see [`SdpSolution`](super::SdpSolution) for
/// field semantics.
#[derive(Debug, Clone)]
pub struct HermSdpSolution {
    pub status: SdpStatus,
    pub blocks: Vec<HermitianMatrix>,
    pub free_values: Vec<f64>,
    pub duals: Vec<f64>,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
    /// Per-block deviation of the real solution from an exact embedding,
    /// relative to its norm.
    pub embedding_skew: Vec<f64>,
    pub ray_violation: Option<f64>,
    pub trace: Vec<IterStat>,
}

/// Raw real embedding `[[Re A, -Im A], [Im A, Re A]]` of one matrix
/// (row-major, dimension `2n`). Trace doubles; each eigenvalue appears
/// twice.
pub fn embed_hermitian_matrix(a: &HermitianMatrix) -> (usize, Vec<f64>) {
    let n = a.dim();
    let m = 2 * n;
    let mut e = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            e[i * m + j] = z.re;
            e[(i + n) * m + (j + n)] = z.re;
            e[i * m + (j + n)] = -z.im;
            e[(i + n) * m + j] = z.im;
        }
    }
    (m, e)
}

/// Maps a Hermitian-valued problem onto the real standard form.
///
/// Right-hand sides and free-scalar coefficients are doubled so that
/// embedded constraint values match the complex ones; callers halve the
/// real objective to recover the complex objective.
pub fn embed_hermitian(p: &HermSdpProblem) -> Result<SdpProblem, SdpError> {
    p.validate()?;
    let mut out = SdpProblem::new();
    for (label, dim) in &p.blocks {
        out.add_block(label.clone(), 2 * dim);
    }
    out.complex_structure = vec![true; p.blocks.len()];
    out.free_vars = p.free_vars;
    out.objective_free = p.objective_free.iter().map(|v| 2.0 * v).collect();
    for (b, coeff) in &p.objective {
        out.objective.push((*b, coeff.embed(p.blocks[*b].1)));
    }
    for c in &p.constraints {
        let mut rc = Constraint {
            terms: vec![],
            free_terms: c.free_terms.iter().map(|&(k, v)| (k, 2.0 * v)).collect(),
            rhs: 2.0 * c.rhs,
            sense: c.sense,
        };
        for (b, coeff) in &c.terms {
            rc.terms.push((*b, coeff.embed(p.blocks[*b].1)));
        }
        out.constraints.push(rc);
    }
    Ok(out)
}

/// De-embeds one real block back to a Hermitian matrix, returning the
/// relative skew of the averaging.
fn de_embed_block(dim: usize, real: &[f64]) -> (HermitianMatrix, f64) {
    let m = 2 * dim;
    assert_eq!(real.len(), m * m);
    let h = CMatrix::from_fn(dim, dim, |i, j| {
        let re = 0.5 * (real[i * m + j] + real[(i + dim) * m + (j + dim)]);
        let im = 0.5 * (real[(i + dim) * m + j] - real[i * m + (j + dim)]);
        Complex64::new(re, im)
    });
    let herm = HermitianMatrix::symmetrized(h);
    let (_, back) = embed_hermitian_matrix(&herm);
    let mut dev = 0.0;
    let mut scale = 0.0;
    for (a, b) in real.iter().zip(&back) {
        dev += (a - b) * (a - b);
        scale += a * a;
    }
    (herm, dev.sqrt() / scale.sqrt().max(1.0))
}

/// Embeds, solves, and de-embeds a Hermitian-valued SDP.
pub fn solve_hermitian(p: &HermSdpProblem) -> Result<HermSdpSolution, SdpError> {
    let real = embed_hermitian(p)?;
    let sol = real.solve()?;
    let mut blocks = Vec::with_capacity(p.blocks.len());
    let mut skew = Vec::with_capacity(p.blocks.len());
    for (idx, (_, dim)) in p.blocks.iter().enumerate() {
        let (h, s) = de_embed_block(*dim, &sol.blocks[idx]);
        blocks.push(h);
        skew.push(s);
    }
    Ok(HermSdpSolution {
        status: sol.status,
        blocks,
        free_values: sol.free_values,
        duals: sol.duals,
        objective: 0.5 * sol.objective,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        gap: sol.gap,
        iterations: sol.iterations,
        embedding_skew: skew,
        ray_violation: sol.ray_violation,
        trace: sol.trace,
    })
}
