//! Primal-dual interior-point solver for small dense semidefinite programs.
//!
//! Problems are stated in primal standard form over a product of PSD blocks
//! plus optional free scalars:
//!
//! ```text
//!   minimize    sum_b <C_b, X_b> + c_f' u
//!   subject to  sum_b <A_ib, X_b> + f_i' u  (= or >=)  b_i      for each i
//!               X_b PSD,  u free
//! ```
//!
//! Inequalities are converted internally to equalities with nonnegative
//! slacks (1x1 PSD blocks). The solver is a Mehrotra-style predictor-
//! corrector with Nesterov-Todd scaling; see [`solve`] internals. Complex
//! Hermitian problems enter through the real embedding in [`hermitian`].
//!
//! Coefficient matrices are symmetric and stored either as upper-triangle
//! sparse triplets or as weighted sums of rank-one outer products; the
//! normal-equations assembly exploits both forms.

mod dmat;
mod hermitian;
mod solve;

pub(crate) use dmat::DMat;
pub use hermitian::{
    embed_hermitian, embed_hermitian_matrix, solve_hermitian, HermCoeff, HermConstraint,
    HermSdpProblem, HermSdpSolution,
};

use serde::Serialize;
use thiserror::Error;

/// Constraint sense: equality or greater-or-equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Eq,
    Ge,
}

/// Symmetric coefficient matrix on one PSD block.
#[derive(Debug, Clone, Serialize)]
pub enum Coeff {
    /// Upper-triangle triplets `(i, j, v)` with `i <= j`; off-diagonal
    /// entries are mirrored.
    Sparse(Vec<(usize, usize, f64)>),
    /// Weighted rank-one sum `sum_r lambda_r u_r u_r^T`.
    Rank(Vec<(f64, Vec<f64>)>),
}

impl Coeff {
    pub fn identity(dim: usize) -> Coeff {
        Coeff::Sparse((0..dim).map(|i| (i, i, 1.0)).collect())
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Coeff {
        Coeff::Sparse((0..dim).map(|i| (i, i, c)).collect())
    }

    /// `<A, X>` for dense symmetric `X`.
    pub(crate) fn apply(&self, x: &DMat) -> f64 {
        match self {
            Coeff::Sparse(ts) => {
                let mut s = 0.0;
                for &(i, j, v) in ts {
                    s += v * x.at(i, j) * if i == j { 1.0 } else { 2.0 };
                }
                s
            }
            Coeff::Rank(terms) => {
                let mut s = 0.0;
                for (lam, u) in terms {
                    let xu = x.matvec(u);
                    let q: f64 = u.iter().zip(&xu).map(|(&a, &b)| a * b).sum();
                    s += lam * q;
                }
                s
            }
        }
    }

    /// `target += c * A`.
    pub(crate) fn add_into(&self, target: &mut DMat, c: f64) {
        let n = target.n;
        match self {
            Coeff::Sparse(ts) => {
                for &(i, j, v) in ts {
                    target.a[i * n + j] += c * v;
                    if i != j {
                        target.a[j * n + i] += c * v;
                    }
                }
            }
            Coeff::Rank(terms) => {
                for (lam, u) in terms {
                    let s = c * lam;
                    for i in 0..n {
                        let si = s * u[i];
                        for j in 0..n {
                            target.a[i * n + j] += si * u[j];
                        }
                    }
                }
            }
        }
    }

    fn validate(&self, dim: usize) -> Result<(), SdpError> {
        match self {
            Coeff::Sparse(ts) => {
                for &(i, j, v) in ts {
                    if i > j || j >= dim || !v.is_finite() {
                        return Err(SdpError::BadCoefficient);
                    }
                }
            }
            Coeff::Rank(terms) => {
                for (lam, u) in terms {
                    if u.len() != dim
                        || !lam.is_finite()
                        || u.iter().any(|x| !x.is_finite())
                    {
                        return Err(SdpError::BadCoefficient);
                    }
                }
            }
        }
        Ok(())
    }
}

/// One scalar constraint row.
#[derive(Debug, Clone, Serialize)]
pub struct Constraint {
    /// Per-block coefficients as `(block index, matrix)`.
    pub terms: Vec<(usize, Coeff)>,
    /// Free-scalar coefficients as `(free index, value)`.
    pub free_terms: Vec<(usize, f64)>,
    pub rhs: f64,
    pub sense: Sense,
}

impl Constraint {
    pub fn eq(rhs: f64) -> Self {
        Self { terms: vec![], free_terms: vec![], rhs, sense: Sense::Eq }
    }

    pub fn ge(rhs: f64) -> Self {
        Self { terms: vec![], free_terms: vec![], rhs, sense: Sense::Ge }
    }

    pub fn with_term(mut self, block: usize, coeff: Coeff) -> Self {
        self.terms.push((block, coeff));
        self
    }

    pub fn with_free(mut self, idx: usize, v: f64) -> Self {
        self.free_terms.push((idx, v));
        self
    }
}

/// Standard-form block SDP (see module docs); minimization convention.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SdpProblem {
    /// PSD blocks as `(label, dim)`.
    pub blocks: Vec<(String, usize)>,
    /// Number of unconstrained real scalars.
    pub free_vars: usize,
    /// Objective coefficients per block.
    pub objective: Vec<(usize, Coeff)>,
    /// Objective coefficients per free scalar (length `free_vars`).
    pub objective_free: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// Blocks that are real embeddings of Hermitian matrices (dimension
    /// `2n`, data commuting with the complex structure `J`). The solver
    /// projects such iterates onto the J-invariant subspace, which removes
    /// the spurious degenerate directions the embedding introduces. Empty
    /// means none.
    pub complex_structure: Vec<bool>,
}

/// Problem construction / validation errors.
#[derive(Debug, Error)]
pub enum SdpError {
    #[error("coefficient matrix is malformed (index out of range or non-finite)")]
    BadCoefficient,
    #[error("block reference out of range")]
    BadBlockIndex,
    #[error("free-scalar reference out of range")]
    BadFreeIndex,
    #[error("block dimension must be >= 1")]
    EmptyBlock,
    #[error("problem has no constraints and no objective")]
    Vacuous,
    #[error("objective_free length must equal free_vars")]
    ObjectiveFreeLength,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a PSD block, returning its index.
    pub fn add_block(&mut self, label: impl Into<String>, dim: usize) -> usize {
        self.blocks.push((label.into(), dim));
        self.blocks.len() - 1
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        for (_, dim) in &self.blocks {
            if *dim == 0 {
                return Err(SdpError::EmptyBlock);
            }
        }
        if self.objective_free.len() != self.free_vars {
            return Err(SdpError::ObjectiveFreeLength);
        }
        let check_terms = |terms: &[(usize, Coeff)]| -> Result<(), SdpError> {
            for (b, coeff) in terms {
                let dim = self
                    .blocks
                    .get(*b)
                    .ok_or(SdpError::BadBlockIndex)?
                    .1;
                coeff.validate(dim)?;
            }
            Ok(())
        };
        check_terms(&self.objective)?;
        for c in &self.constraints {
            check_terms(&c.terms)?;
            for (k, v) in &c.free_terms {
                if *k >= self.free_vars || !v.is_finite() {
                    return Err(SdpError::BadFreeIndex);
                }
            }
            if !c.rhs.is_finite() {
                return Err(SdpError::BadCoefficient);
            }
        }
        if self.constraints.is_empty()
            && self.objective.is_empty()
            && self.objective_free.iter().all(|&v| v == 0.0)
        {
            return Err(SdpError::Vacuous);
        }
        if !self.complex_structure.is_empty() {
            if self.complex_structure.len() != self.blocks.len() {
                return Err(SdpError::BadBlockIndex);
            }
            for (flag, (_, dim)) in self.complex_structure.iter().zip(&self.blocks) {
                if *flag && dim % 2 != 0 {
                    return Err(SdpError::EmptyBlock);
                }
            }
        }
        Ok(())
    }

    /// Solves the program. See [`SdpSolution`] for the result contract.
    pub fn solve(&self) -> Result<SdpSolution, SdpError> {
        self.validate()?;
        Ok(solve::solve(self))
    }

    /// Debug dump of the full problem as a JSON document.
    pub fn to_debug_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("problem serialization cannot fail")
    }
}

/// Solver outcome classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SdpStatus {
    /// KKT residuals and relative gap all within 1e-8.
    Optimal,
    /// A dual improving ray certifies primal infeasibility.
    Infeasible,
    /// A primal improving ray certifies dual infeasibility.
    Unbounded,
    /// Iteration cap or numerical breakdown before reaching tolerance.
    NumericalFailure,
}

/// Per-iteration progress record (kept for diagnostics and tests).
#[derive(Debug, Clone, Copy)]
pub struct IterStat {
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub mu: f64,
}

/// Certified primal-dual answer.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Primal block values (row-major dense symmetric), user blocks only.
    pub blocks: Vec<Vec<f64>>,
    /// Free scalar values.
    pub free_values: Vec<f64>,
    /// Dual multipliers, one per constraint in input order.
    pub duals: Vec<f64>,
    /// Primal objective at the returned iterate.
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Relative duality gap.
    pub gap: f64,
    pub iterations: usize,
    /// For `Infeasible`: the certificate violation `b' y_ray`.
    pub ray_violation: Option<f64>,
    pub trace: Vec<IterStat>,
}
