//! Mehrotra predictor-corrector interior-point method with Nesterov-Todd
//! scaling.
//!
//! Search directions come from the scaled complementarity linearization
//! `dX + W dS W = T`, where `W` is the NT scaling point (`W S W = X`).
//! Eliminating `dX` and `dS` yields the normal equations
//! `M dy + F du = h` with `M_ij = sum_b <A_ib, W A_jb W>`, solved by dense
//! Cholesky; free scalars go through a Schur complement with a 1e-12
//! regularizer. The corrector target uses the scaled second-order term
//! evaluated in the eigenbasis of `V = W^{-1/2} X W^{-1/2}`.

use super::dmat::DMat;
use super::{Coeff, IterStat, SdpProblem, SdpSolution, SdpStatus, Sense};

/// Iteration cap; past it the best iterate is reported.
const MAX_ITERS: usize = 200;
/// Fraction-to-boundary step damping.
const STEP_FRACTION: f64 = 0.98;
/// Residual level at which a solution is accepted as Optimal.
const ACCEPT_TOL: f64 = 1e-8;
/// Residual level the solver keeps polishing toward.
const TARGET_TOL: f64 = 2e-10;
/// Free-variable Schur complement regularizer.
const FREE_REG: f64 = 1e-12;
/// Normalized dual objective threshold for infeasibility detection.
const DIVERGE_TOL: f64 = 1e8;

struct ConRow {
    terms: Vec<(usize, Coeff)>,
    free_terms: Vec<(usize, f64)>,
    rhs: f64,
}

/// Preprocessed problem: inequalities converted to equalities with slack
/// blocks appended after the user blocks.
struct Internal {
    dims: Vec<usize>,
    n_user: usize,
    cons: Vec<ConRow>,
    c_mats: Vec<DMat>,
    c_free: Vec<f64>,
    n_free: usize,
    nu: f64,
    c_norm: f64,
    b_norm: f64,
    complex_structure: Vec<bool>,
}

/// Projects a Hermitian-embedding block onto the J-invariant subspace:
/// `[[A, B], [B^T, D]] -> [[(A+D)/2, (B-B^T)/2], [., .]]`. Exact for
/// embedded data (the subspace contains the whole feasible slice) and
/// preserves positive semidefiniteness.
fn j_average(x: &mut DMat) {
    let m = x.n;
    let n = m / 2;
    for i in 0..n {
        for j in 0..n {
            let a = x.a[i * m + j];
            let d = x.a[(i + n) * m + (j + n)];
            let avg = 0.5 * (a + d);
            x.a[i * m + j] = avg;
            x.a[(i + n) * m + (j + n)] = avg;
            let b = x.a[i * m + (j + n)];
            let bt = x.a[j * m + (i + n)];
            let skew = 0.5 * (b - bt);
            x.a[i * m + (j + n)] = skew;
            x.a[j * m + (i + n)] = -skew;
        }
    }
    // Restore exact symmetry of the full block.
    for i in 0..n {
        for j in 0..n {
            x.a[(i + n) * m + j] = x.a[j * m + (i + n)];
            x.a[(j + n) * m + i] = x.a[i * m + (j + n)];
        }
    }
}

fn preprocess(p: &SdpProblem) -> Internal {
    let n_user = p.blocks.len();
    let mut dims: Vec<usize> = p.blocks.iter().map(|(_, d)| *d).collect();
    let mut cons: Vec<ConRow> = Vec::with_capacity(p.constraints.len());
    for c in &p.constraints {
        let mut terms = c.terms.clone();
        if c.sense == Sense::Ge {
            let slack = dims.len();
            dims.push(1);
            terms.push((slack, Coeff::Sparse(vec![(0, 0, -1.0)])));
        }
        cons.push(ConRow {
            terms,
            free_terms: c.free_terms.clone(),
            rhs: c.rhs,
        });
    }
    let mut c_mats: Vec<DMat> = dims.iter().map(|&d| DMat::zeros(d)).collect();
    for (b, coeff) in &p.objective {
        coeff.add_into(&mut c_mats[*b], 1.0);
    }
    let nu: f64 = dims.iter().map(|&d| d as f64).sum();
    let c_norm = c_mats
        .iter()
        .map(|m| m.fro_norm().powi(2))
        .sum::<f64>()
        .sqrt();
    let b_norm = cons.iter().map(|c| c.rhs * c.rhs).sum::<f64>().sqrt();
    let mut complex_structure = if p.complex_structure.is_empty() {
        vec![false; n_user]
    } else {
        p.complex_structure.clone()
    };
    complex_structure.resize(dims.len(), false); // slack blocks are real
    Internal {
        dims,
        n_user,
        cons,
        c_mats,
        c_free: p.objective_free.clone(),
        n_free: p.free_vars,
        nu,
        c_norm,
        b_norm,
        complex_structure,
    }
}

struct Scaling {
    w: DMat,
    w_half: DMat,
    w_mhalf: DMat,
    v_vals: Vec<f64>,
    v_vecs: DMat,
}

/// NT scaling point of a (strictly PD) primal-dual block pair.
fn nt_scaling(x: &DMat, s: &DMat) -> Option<Scaling> {
    let floor = |vals: &[f64]| {
        let m = vals.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
        (m * 1e-15).max(1e-300)
    };
    let (ds, us) = s.eig().ok()?;
    let fs = floor(&ds);
    let s_half = DMat::spectral_map(&ds, &us, |l| l.max(fs).sqrt());
    let s_mhalf = DMat::spectral_map(&ds, &us, |l| 1.0 / l.max(fs).sqrt());
    let mut z = s_half.mul(x).mul(&s_half);
    z.symmetrize();
    let (dz, uz) = z.eig().ok()?;
    let fz = floor(&dz);
    let z_half = DMat::spectral_map(&dz, &uz, |l| l.max(fz).sqrt());
    let mut w = s_mhalf.mul(&z_half).mul(&s_mhalf);
    w.symmetrize();
    let (dw, uw) = w.eig().ok()?;
    let fw = floor(&dw);
    let w_half = DMat::spectral_map(&dw, &uw, |l| l.max(fw).sqrt());
    let w_mhalf = DMat::spectral_map(&dw, &uw, |l| 1.0 / l.max(fw).sqrt());
    let mut v = w_mhalf.mul(x).mul(&w_mhalf);
    v.symmetrize();
    let (dv, qv) = v.eig().ok()?;
    if dv[0] <= 0.0 {
        return None;
    }
    Some(Scaling {
        w,
        w_half,
        w_mhalf,
        v_vals: dv,
        v_vecs: qv,
    })
}

/// Inverse of the Lyapunov operator `U -> (V U + U V) / 2` in V's eigenbasis.
fn lyapunov_inv(sc: &Scaling, u: &DMat) -> DMat {
    let q = &sc.v_vecs;
    let n = q.n;
    // A = Q^T U Q
    let uq = u.mul(q);
    let mut a = DMat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += q.a[k * n + i] * uq.a[k * n + j];
            }
            a.a[i * n + j] = s;
        }
    }
    for i in 0..n {
        for j in 0..n {
            a.a[i * n + j] *= 2.0 / (sc.v_vals[i] + sc.v_vals[j]);
        }
    }
    // Q A Q^T
    let qa = q.mul(&a);
    let mut out = DMat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += qa.a[i * n + k] * q.a[j * n + k];
            }
            out.a[i * n + j] = s;
        }
    }
    out.symmetrize();
    out
}

/// Largest step `a` keeping `X + a dX` in the PSD cone (capped later).
fn max_cone_step(x: &DMat, dx: &DMat) -> f64 {
    let l = match x.cholesky() {
        Some(l) => l,
        // Iterate grazing the boundary: no safe step.
        None => return 0.0,
    };
    let mut q = DMat::two_sided_tri_solve(&l, dx);
    q.symmetrize();
    let lam_min = match q.eig() {
        Ok((vals, _)) => vals[0],
        Err(_) => return 0.0,
    };
    if lam_min >= -1e-13 {
        f64::INFINITY
    } else {
        -1.0 / lam_min
    }
}

/// Normal-equation workspace for one iteration.
struct Newton<'a> {
    ir: &'a Internal,
    scalings: Vec<Scaling>,
    m_mat: DMat,
    m_chol: DMat,
    f_mat: Vec<f64>, // m x n_free, row-major
}

impl<'a> Newton<'a> {
    fn build(ir: &'a Internal, x: &[DMat], s: &[DMat]) -> Option<Newton<'a>> {
        let scalings: Option<Vec<Scaling>> = x
            .iter()
            .zip(s)
            .map(|(xb, sb)| nt_scaling(xb, sb))
            .collect();
        let scalings = scalings?;
        let m = ir.cons.len();

        let mut mmat = DMat::zeros(m);
        // Per-block assembly: rank terms via a Gram matrix of W-mapped
        // vectors, sparse terms via dense W A W, cross terms via the mapped
        // vectors directly.
        let nb = ir.dims.len();
        for b in 0..nb {
            let w = &scalings[b].w;
            let mut rank: Vec<(usize, f64, &Vec<f64>)> = Vec::new();
            let mut sparse: Vec<(usize, &Vec<(usize, usize, f64)>)> = Vec::new();
            for (ci, row) in ir.cons.iter().enumerate() {
                for (tb, coeff) in &row.terms {
                    if *tb != b {
                        continue;
                    }
                    match coeff {
                        Coeff::Rank(terms) => {
                            for (lam, u) in terms {
                                rank.push((ci, *lam, u));
                            }
                        }
                        Coeff::Sparse(ts) => sparse.push((ci, ts)),
                    }
                }
            }
            if rank.is_empty() && sparse.is_empty() {
                continue;
            }

            let mapped: Vec<Vec<f64>> = rank.iter().map(|(_, _, u)| w.matvec(u)).collect();

            // rank x rank
            for a_idx in 0..rank.len() {
                let (ca, la, ua) = rank[a_idx];
                for b_idx in a_idx..rank.len() {
                    let (cb, lb, _) = rank[b_idx];
                    let g: f64 = ua.iter().zip(&mapped[b_idx]).map(|(&p, &q)| p * q).sum();
                    let contrib = la * lb * g * g;
                    let (i, j) = (ca.min(cb), ca.max(cb));
                    if a_idx == b_idx {
                        *mmat.at_mut(i, j) += contrib;
                    } else if ca == cb {
                        *mmat.at_mut(i, j) += 2.0 * contrib;
                    } else {
                        *mmat.at_mut(i, j) += contrib;
                    }
                }
            }

            // sparse x sparse (via dense W A W per sparse term)
            let dim = ir.dims[b];
            let waw: Vec<DMat> = sparse
                .iter()
                .map(|(_, ts)| {
                    let mut t = DMat::zeros(dim);
                    for &(i, j, v) in ts.iter() {
                        for r in 0..dim {
                            let wri = w.at(r, i);
                            let wrj = w.at(r, j);
                            for c in 0..dim {
                                let add = if i == j {
                                    v * wri * w.at(c, i)
                                } else {
                                    v * (wri * w.at(c, j) + wrj * w.at(c, i))
                                };
                                t.a[r * dim + c] += add;
                            }
                        }
                    }
                    t
                })
                .collect();
            for s_idx in 0..sparse.len() {
                let (ca, ts_a) = sparse[s_idx];
                for t_idx in s_idx..sparse.len() {
                    let (cb, _) = sparse[t_idx];
                    let t = &waw[t_idx];
                    let mut contrib = 0.0;
                    for &(i, j, v) in ts_a.iter() {
                        contrib += v * t.at(i, j) * if i == j { 1.0 } else { 2.0 };
                    }
                    let (i, j) = (ca.min(cb), ca.max(cb));
                    if s_idx == t_idx {
                        *mmat.at_mut(i, j) += contrib;
                    } else if ca == cb {
                        *mmat.at_mut(i, j) += 2.0 * contrib;
                    } else {
                        *mmat.at_mut(i, j) += contrib;
                    }
                }
            }

            // sparse x rank: <A_sparse, W (lam u u^T) W> via mapped vectors
            for &(ca, ts) in &sparse {
                for (r_idx, &(cb, lb, _)) in rank.iter().enumerate() {
                    let p = &mapped[r_idx];
                    let mut contrib = 0.0;
                    for &(i, j, v) in ts.iter() {
                        contrib += v * p[i] * p[j] * if i == j { 1.0 } else { 2.0 };
                    }
                    contrib *= lb;
                    let (i, j) = (ca.min(cb), ca.max(cb));
                    if ca == cb {
                        *mmat.at_mut(i, j) += 2.0 * contrib;
                    } else {
                        *mmat.at_mut(i, j) += contrib;
                    }
                }
            }
        }
        for i in 0..m {
            for j in i + 1..m {
                let v = mmat.at(i, j);
                *mmat.at_mut(j, i) = v;
            }
        }

        // Cholesky with escalating jitter on the diagonal.
        let diag_max = (0..m).fold(0.0_f64, |a, i| a.max(mmat.at(i, i)));
        let mut jitter = 0.0;
        let m_chol = loop {
            let mut trial = mmat.clone();
            if jitter > 0.0 {
                for i in 0..m {
                    *trial.at_mut(i, i) += jitter;
                }
            }
            match trial.cholesky() {
                Some(l) => break l,
                None => {
                    jitter = if jitter == 0.0 {
                        (diag_max * 1e-14).max(1e-300)
                    } else {
                        jitter * 100.0
                    };
                    if jitter > diag_max.max(1.0) {
                        return None;
                    }
                }
            }
        };

        let n_free = ir.n_free;
        let mut f_mat = vec![0.0; m * n_free.max(1)];
        if n_free > 0 {
            for (i, row) in ir.cons.iter().enumerate() {
                for &(k, v) in &row.free_terms {
                    f_mat[i * n_free + k] += v;
                }
            }
        }

        Some(Newton {
            ir,
            scalings,
            m_mat: mmat,
            m_chol,
            f_mat,
        })
    }

    /// `M^{-1} rhs` with one pass of iterative refinement against the
    /// unjittered normal matrix.
    fn m_solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = rhs.len();
        let mut x = rhs.to_vec();
        DMat::chol_solve(&self.m_chol, &mut x);
        let mx = self.m_mat.matvec(&x);
        let mut resid: Vec<f64> = rhs.iter().zip(&mx).map(|(&b, &v)| b - v).collect();
        DMat::chol_solve(&self.m_chol, &mut resid);
        for i in 0..m {
            x[i] += resid[i];
        }
        x
    }

    /// Solves `M dy + F du = h`, `F^T dy = rf` (regularized Schur for du).
    fn solve_kkt(&self, h: &[f64], rf: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = self.ir.cons.len();
        let n_free = self.ir.n_free;
        let w = self.m_solve(h);
        if n_free == 0 {
            return (w, vec![]);
        }
        let mut z = vec![0.0; m * n_free];
        for k in 0..n_free {
            let col_rhs: Vec<f64> = (0..m).map(|i| self.f_mat[i * n_free + k]).collect();
            let col = self.m_solve(&col_rhs);
            for i in 0..m {
                z[i * n_free + k] = col[i];
            }
        }
        let mut schur = DMat::zeros(n_free);
        for a in 0..n_free {
            for bidx in 0..n_free {
                let mut s = 0.0;
                for i in 0..m {
                    s += self.f_mat[i * n_free + a] * z[i * n_free + bidx];
                }
                schur.a[a * n_free + bidx] = s;
            }
            schur.a[a * n_free + a] += FREE_REG;
        }
        let mut rhs: Vec<f64> = (0..n_free)
            .map(|a| {
                let ftw: f64 = (0..m).map(|i| self.f_mat[i * n_free + a] * w[i]).sum();
                ftw - rf[a]
            })
            .collect();
        match schur.cholesky() {
            Some(l) => DMat::chol_solve(&l, &mut rhs),
            None => rhs.iter_mut().for_each(|v| *v = 0.0),
        }
        let du = rhs;
        let mut dy = w;
        for i in 0..m {
            let mut corr = 0.0;
            for k in 0..n_free {
                corr += z[i * n_free + k] * du[k];
            }
            dy[i] -= corr;
        }
        (dy, du)
    }

    /// Given a complementarity target `T`, returns `(dy, du, dS, dX)`.
    fn direction(
        &self,
        rp: &[f64],
        rd: &[DMat],
        rf: &[f64],
        target: &[DMat],
    ) -> (Vec<f64>, Vec<f64>, Vec<DMat>, Vec<DMat>) {
        let ir = self.ir;
        let m = ir.cons.len();
        // h_i = rp_i - A_i(T) + A_i(W Rd W)
        let w_rd_w: Vec<DMat> = rd
            .iter()
            .enumerate()
            .map(|(b, rdb)| {
                let w = &self.scalings[b].w;
                let mut t = w.mul(rdb).mul(w);
                t.symmetrize();
                t
            })
            .collect();
        let mut h = vec![0.0; m];
        for (i, row) in ir.cons.iter().enumerate() {
            let mut v = rp[i];
            for (b, coeff) in &row.terms {
                v -= coeff.apply(&target[*b]);
                v += coeff.apply(&w_rd_w[*b]);
            }
            h[i] = v;
        }
        let (dy, du) = self.solve_kkt(&h, rf);
        // dS = Rd - A^*(dy); dX = T - W dS W
        let nb = ir.dims.len();
        let mut ds: Vec<DMat> = rd.to_vec();
        for (i, row) in ir.cons.iter().enumerate() {
            for (b, coeff) in &row.terms {
                coeff.add_into(&mut ds[*b], -dy[i]);
            }
        }
        let mut dx: Vec<DMat> = Vec::with_capacity(nb);
        for b in 0..nb {
            let w = &self.scalings[b].w;
            let mut wdw = w.mul(&ds[b]).mul(w);
            wdw.symmetrize();
            let mut d = target[b].clone();
            d.add_scaled(&wdw, -1.0);
            d.symmetrize();
            dx.push(d);
        }
        (dy, du, ds, dx)
    }
}

struct Iterate {
    x: Vec<DMat>,
    s: Vec<DMat>,
    y: Vec<f64>,
    u: Vec<f64>,
}

impl Iterate {
    fn snapshot(&self) -> Iterate {
        Iterate {
            x: self.x.clone(),
            s: self.s.clone(),
            y: self.y.clone(),
            u: self.u.clone(),
        }
    }
}

struct Residuals {
    rp: Vec<f64>,
    rd: Vec<DMat>,
    rf: Vec<f64>,
    pres: f64,
    dres: f64,
    gap: f64,
    pobj: f64,
    dobj: f64,
    mu: f64,
}

impl Residuals {
    fn worst(&self) -> f64 {
        self.pres.max(self.dres).max(self.gap)
    }
}

fn residuals(ir: &Internal, it: &Iterate) -> Residuals {
    let m = ir.cons.len();
    let mut rp = vec![0.0; m];
    for (i, row) in ir.cons.iter().enumerate() {
        let mut v = row.rhs;
        for (b, coeff) in &row.terms {
            v -= coeff.apply(&it.x[*b]);
        }
        for &(k, f) in &row.free_terms {
            v -= f * it.u[k];
        }
        rp[i] = v;
    }
    let mut rd: Vec<DMat> = ir.c_mats.clone();
    for (b, rdb) in rd.iter_mut().enumerate() {
        rdb.add_scaled(&it.s[b], -1.0);
    }
    for (i, row) in ir.cons.iter().enumerate() {
        for (b, coeff) in &row.terms {
            coeff.add_into(&mut rd[*b], -it.y[i]);
        }
    }
    let mut rf = ir.c_free.clone();
    for (i, row) in ir.cons.iter().enumerate() {
        for &(k, f) in &row.free_terms {
            rf[k] -= f * it.y[i];
        }
    }
    let pobj: f64 = ir
        .c_mats
        .iter()
        .zip(&it.x)
        .map(|(c, x)| c.inner_sym(x))
        .sum::<f64>()
        + ir
            .c_free
            .iter()
            .zip(&it.u)
            .map(|(&c, &u)| c * u)
            .sum::<f64>();
    let dobj: f64 = ir
        .cons
        .iter()
        .zip(&it.y)
        .map(|(row, &yi)| row.rhs * yi)
        .sum();
    let mu = it
        .x
        .iter()
        .zip(&it.s)
        .map(|(x, s)| x.inner_sym(s))
        .sum::<f64>()
        / ir.nu;
    let pres = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + ir.b_norm);
    let dres = (rd.iter().map(|r| r.fro_norm().powi(2)).sum::<f64>()
        + rf.iter().map(|v| v * v).sum::<f64>())
    .sqrt()
        / (1.0 + ir.c_norm);
    let gap = (pobj - dobj).abs() / (1.0 + pobj.abs().max(dobj.abs()));
    Residuals {
        rp,
        rd,
        rf,
        pres,
        dres,
        gap,
        pobj,
        dobj,
        mu,
    }
}

fn extract(
    ir: &Internal,
    it: &Iterate,
    res: &Residuals,
    status: SdpStatus,
    iterations: usize,
    ray_violation: Option<f64>,
    trace: Vec<IterStat>,
) -> SdpSolution {
    SdpSolution {
        status,
        blocks: it.x[..ir.n_user].iter().map(|x| x.a.clone()).collect(),
        free_values: it.u.clone(),
        duals: it.y.clone(),
        objective: res.pobj,
        primal_residual: res.pres,
        dual_residual: res.dres,
        gap: res.gap,
        iterations,
        ray_violation,
        trace,
    }
}

/// Checks whether `(y, S)` normalized is a dual improving ray certifying
/// primal infeasibility; returns the violation `b' y_hat` if so.
fn dual_ray_violation(ir: &Internal, it: &Iterate) -> Option<f64> {
    let ynorm = it.y.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    if ynorm <= 0.0 {
        return None;
    }
    // Homogeneous dual residual: A^*(y) + S ≈ 0 and F^T y ≈ 0 after scaling.
    let mut hres: Vec<DMat> = it
        .s
        .iter()
        .map(|s| {
            let mut m = s.clone();
            m.scale_in_place(1.0 / ynorm);
            m
        })
        .collect();
    for (i, row) in ir.cons.iter().enumerate() {
        for (b, coeff) in &row.terms {
            coeff.add_into(&mut hres[*b], it.y[i] / ynorm);
        }
    }
    let mut sq: f64 = hres.iter().map(|r| r.fro_norm().powi(2)).sum();
    for k in 0..ir.n_free {
        let mut v = 0.0;
        for (i, row) in ir.cons.iter().enumerate() {
            for &(kk, f) in &row.free_terms {
                if kk == k {
                    v += f * it.y[i];
                }
            }
        }
        sq += (v / ynorm).powi(2);
    }
    let violation: f64 = ir
        .cons
        .iter()
        .zip(&it.y)
        .map(|(row, &yi)| row.rhs * yi / ynorm)
        .sum();
    if sq.sqrt() <= 1e-6 && violation >= 1e-6 {
        Some(violation)
    } else {
        None
    }
}

/// Primal improving ray check for unboundedness: A(X/tr) ≈ 0, <C, X/tr> < 0.
fn primal_ray_improves(ir: &Internal, it: &Iterate) -> bool {
    let txs: f64 = it.x.iter().map(|x| x.trace()).sum();
    if txs <= 0.0 {
        return false;
    }
    let mut sq = 0.0;
    for row in &ir.cons {
        let mut v = 0.0;
        for (b, coeff) in &row.terms {
            v += coeff.apply(&it.x[*b]);
        }
        sq += (v / txs).powi(2);
    }
    let cval: f64 = ir
        .c_mats
        .iter()
        .zip(&it.x)
        .map(|(c, x)| c.inner_sym(x))
        .sum::<f64>()
        / txs;
    sq.sqrt() <= 1e-6 && cval <= -1e-6
}

pub(super) fn solve(p: &SdpProblem) -> SdpSolution {
    let ir = preprocess(p);
    let nb = ir.dims.len();
    let m = ir.cons.len();

    // Initialization at tau * I with tau = 1 + max |rhs|.
    let tau = 1.0 + ir.cons.iter().fold(0.0_f64, |a, c| a.max(c.rhs.abs()));
    let mut it = Iterate {
        x: ir
            .dims
            .iter()
            .map(|&d| DMat::scaled_identity(d, tau))
            .collect(),
        s: ir
            .dims
            .iter()
            .map(|&d| DMat::scaled_identity(d, tau))
            .collect(),
        y: vec![0.0; m],
        u: vec![0.0; ir.n_free],
    };

    let mut trace: Vec<IterStat> = Vec::new();
    let mut best: Option<(f64, Iterate)> = None;
    let mut stall = 0usize;
    let mut good_iters = 0usize;
    let obj_scale = 1.0 + ir.c_norm + ir.b_norm;

    for iter in 0..MAX_ITERS {
        let res = residuals(&ir, &it);
        trace.push(IterStat {
            primal_objective: res.pobj,
            dual_objective: res.dobj,
            primal_residual: res.pres,
            dual_residual: res.dres,
            gap: res.gap,
            mu: res.mu,
        });

        let worst = res.worst();
        if best.as_ref().map_or(true, |(w, _)| worst < *w) {
            best = Some((worst, it.snapshot()));
        }

        if worst <= TARGET_TOL {
            return extract(&ir, &it, &res, SdpStatus::Optimal, iter, None, trace);
        }
        if worst <= ACCEPT_TOL {
            good_iters += 1;
            // Converged but no longer polishing; stop early.
            if good_iters >= 5 {
                return extract(&ir, &it, &res, SdpStatus::Optimal, iter, None, trace);
            }
        }

        if res.dobj > DIVERGE_TOL * obj_scale && res.pres > 1e-7 {
            if let Some(violation) = dual_ray_violation(&ir, &it) {
                return extract(
                    &ir,
                    &it,
                    &res,
                    SdpStatus::Infeasible,
                    iter,
                    Some(violation),
                    trace,
                );
            }
        }
        if res.pobj < -DIVERGE_TOL * obj_scale && res.dres > 1e-7 && primal_ray_improves(&ir, &it)
        {
            return extract(&ir, &it, &res, SdpStatus::Unbounded, iter, None, trace);
        }

        let newton = match Newton::build(&ir, &it.x, &it.s) {
            Some(n) => n,
            None => break,
        };

        // Predictor (affine scaling) direction: target T = -X.
        let target_aff: Vec<DMat> = it
            .x
            .iter()
            .map(|xb| {
                let mut t = xb.clone();
                t.scale_in_place(-1.0);
                t
            })
            .collect();
        let (_, _, ds_a, dx_a) = newton.direction(&res.rp, &res.rd, &res.rf, &target_aff);

        let mut ap_aff = f64::INFINITY;
        let mut ad_aff = f64::INFINITY;
        for b in 0..nb {
            ap_aff = ap_aff.min(max_cone_step(&it.x[b], &dx_a[b]));
            ad_aff = ad_aff.min(max_cone_step(&it.s[b], &ds_a[b]));
        }
        let ap_aff = ap_aff.min(1.0);
        let ad_aff = ad_aff.min(1.0);

        // Mehrotra centering weight.
        let mut gap_aff = 0.0;
        for b in 0..nb {
            let mut xa = it.x[b].clone();
            xa.add_scaled(&dx_a[b], ap_aff);
            let mut sa = it.s[b].clone();
            sa.add_scaled(&ds_a[b], ad_aff);
            gap_aff += xa.inner_sym(&sa);
        }
        let mu_aff = (gap_aff / ir.nu).max(0.0);
        let sigma = ((mu_aff / res.mu).powi(3)).clamp(1e-8, 1.0);

        // Corrector target with the scaled second-order term.
        let target: Vec<DMat> = (0..nb)
            .map(|b| {
                let sc = &newton.scalings[b];
                let dim = ir.dims[b];
                let xt = {
                    let mut t = sc.w_mhalf.mul(&dx_a[b]).mul(&sc.w_mhalf);
                    t.symmetrize();
                    t
                };
                let st = {
                    let mut t = sc.w_half.mul(&ds_a[b]).mul(&sc.w_half);
                    t.symmetrize();
                    t
                };
                let mut rhs = DMat::scaled_identity(dim, sigma * res.mu);
                let prod = xt.mul(&st);
                for i in 0..dim {
                    for j in 0..dim {
                        rhs.a[i * dim + j] -= 0.5 * (prod.a[i * dim + j] + prod.a[j * dim + i]);
                    }
                }
                let core = lyapunov_inv(sc, &rhs);
                let mut t = sc.w_half.mul(&core).mul(&sc.w_half);
                t.symmetrize();
                t.add_scaled(&it.x[b], -1.0);
                t
            })
            .collect();

        let (dy, du, ds, dx) = newton.direction(&res.rp, &res.rd, &res.rf, &target);

        let mut ap = f64::INFINITY;
        let mut ad = f64::INFINITY;
        for b in 0..nb {
            ap = ap.min(max_cone_step(&it.x[b], &dx[b]));
            ad = ad.min(max_cone_step(&it.s[b], &ds[b]));
        }
        let mut ap = (STEP_FRACTION * ap).min(1.0);
        let mut ad = (STEP_FRACTION * ad).min(1.0);
        let mut dy = dy;
        let mut du = du;
        let mut ds = ds;
        let mut dx = dx;

        if ap < 1e-10 && ad < 1e-10 {
            // Rescue: a plain centering direction often unsticks the
            // endgame when the corrector step collapses.
            let target_center: Vec<DMat> = (0..nb)
                .map(|b| {
                    let sc = &newton.scalings[b];
                    let dim = ir.dims[b];
                    let rhs = DMat::scaled_identity(dim, 0.8 * res.mu);
                    let core = lyapunov_inv(sc, &rhs);
                    let mut t = sc.w_half.mul(&core).mul(&sc.w_half);
                    t.symmetrize();
                    t.add_scaled(&it.x[b], -1.0);
                    t
                })
                .collect();
            let (cy, cu, cs, cx) = newton.direction(&res.rp, &res.rd, &res.rf, &target_center);
            let mut cap = f64::INFINITY;
            let mut cad = f64::INFINITY;
            for b in 0..nb {
                cap = cap.min(max_cone_step(&it.x[b], &cx[b]));
                cad = cad.min(max_cone_step(&it.s[b], &cs[b]));
            }
            let cap = (STEP_FRACTION * cap).min(1.0);
            let cad = (STEP_FRACTION * cad).min(1.0);
            if cap > ap || cad > ad {
                ap = cap;
                ad = cad;
                dy = cy;
                du = cu;
                ds = cs;
                dx = cx;
            }
        }

        if ap < 1e-10 && ad < 1e-10 {
            stall += 1;
            if stall >= 3 {
                break;
            }
        } else {
            stall = 0;
        }

        for b in 0..nb {
            it.x[b].add_scaled(&dx[b], ap);
            it.x[b].symmetrize();
            it.s[b].add_scaled(&ds[b], ad);
            it.s[b].symmetrize();
            if ir.complex_structure[b] {
                j_average(&mut it.x[b]);
                j_average(&mut it.s[b]);
            }
        }
        for i in 0..m {
            it.y[i] += ad * dy[i];
        }
        for k in 0..ir.n_free {
            // Free scalars are primal variables.
            it.u[k] += ap * du[k];
        }
    }

    // Iteration cap or stall: report the best iterate seen.
    let (_, best_it) = best.expect("at least one iterate recorded");
    let res = residuals(&ir, &best_it);
    let worst = res.worst();
    let iters = trace.len();
    if worst <= ACCEPT_TOL {
        return extract(&ir, &best_it, &res, SdpStatus::Optimal, iters, None, trace);
    }
    if let Some(violation) = dual_ray_violation(&ir, &best_it) {
        return extract(
            &ir,
            &best_it,
            &res,
            SdpStatus::Infeasible,
            iters,
            Some(violation),
            trace,
        );
    }
    extract(
        &ir,
        &best_it,
        &res,
        SdpStatus::NumericalFailure,
        iters,
        None,
        trace,
    )
}
