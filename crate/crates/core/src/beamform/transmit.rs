//! Transmit-side convex steps: the CRB-minimizing SDR with its rank-one
//! reconstruction, the stage-1 power-minimization SDR, and the stage-2
//! "scale beams, add sensing covariance" program.
//!
//! The trace-inverse objective is encoded through an epigraph block: with
//! `U >= (G R_x G^H)^{-1}` enforced by the Schur-complement PSD constraint
//! `[[G R_x G^H, I], [I, U]] >= 0`, minimizing `tr(U)` minimizes the CRB
//! factor. The Schur block is a PSD variable `Y` tied entrywise to the
//! channel variables; each tie coefficient on an `R_x` contributor is a
//! short rank-one combination built from columns of `G^H`.

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::linalg::{cdot, outer, vec_norm, CMatrix, HermitianMatrix};
use crate::sdp::{solve_hermitian, HermCoeff, HermConstraint, HermSdpProblem, SdpStatus};
use crate::system::{combined_channel, ReceiverType, ReflectCoeffs, ScaledSystem, SystemParams, TransmitDesign};

use super::{BeamformError, StepResult};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Columns of `G^H` (conjugated rows of `G`), the building blocks of the
/// epigraph tie coefficients.
fn gh_columns(g_obj: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..g_obj.rows())
        .map(|p| (0..g_obj.cols()).map(|m| g_obj[(p, m)].conj()).collect())
        .collect()
}

/// Rank-one combination representing `-G^H A_pq G` for the real-part basis
/// matrix `A_pq = (E_pq + E_qp)/2`.
fn tie_re_terms(cols: &[Vec<Complex64>], p: usize, q: usize) -> HermCoeff {
    if p == q {
        HermCoeff::Rank(vec![(-1.0, cols[p].clone())])
    } else {
        let plus: Vec<Complex64> = cols[p].iter().zip(&cols[q]).map(|(a, b)| a + b).collect();
        let minus: Vec<Complex64> = cols[p].iter().zip(&cols[q]).map(|(a, b)| a - b).collect();
        HermCoeff::Rank(vec![(-0.25, plus), (0.25, minus)])
    }
}

/// Rank-one combination representing `-G^H A_pq G` for the imaginary-part
/// basis matrix `A_pq = (i E_pq - i E_qp)/2` (p < q).
fn tie_im_terms(cols: &[Vec<Complex64>], p: usize, q: usize) -> HermCoeff {
    let i = c(0.0, 1.0);
    let plus: Vec<Complex64> = cols[p]
        .iter()
        .zip(&cols[q])
        .map(|(a, b)| a + i * b)
        .collect();
    let minus: Vec<Complex64> = cols[p]
        .iter()
        .zip(&cols[q])
        .map(|(a, b)| a - i * b)
        .collect();
    HermCoeff::Rank(vec![(0.25, plus), (-0.25, minus)])
}

/// Adds the epigraph machinery: blocks `U` (objective `tr U`) and the Schur
/// block `Y`, tied entrywise to `Y = [[G Rx G^H, c I], [c I, U]]` where
/// `Rx = sum over rx_blocks (+ t * fixed_cov)`.
///
/// The identity is scaled so that `U >= c^2 (G Rx G^H)^{-1}`: picking
/// `c^2 = 1 / J_sens` with `J_sens` the unconstrained water-filling optimum
/// keeps `tr(U)` near 1 at the solution, balancing the two halves of the
/// Schur block. The scale cancels when the design (not the objective) is
/// read out.
fn add_crb_epigraph(
    p: &mut HermSdpProblem,
    g_obj: &CMatrix,
    rx_blocks: &[usize],
    t_cov: Option<&CMatrix>,
) -> f64 {
    let n = g_obj.rows();
    let u_block = p.add_block("U", n);
    let y_block = p.add_block("Y", 2 * n);
    p.objective.push((u_block, HermCoeff::identity(n)));
    debug_assert!(y_block == u_block + 1);
    let cols = gh_columns(g_obj);
    let ident_scale = {
        let gram = HermitianMatrix::symmetrized(g_obj.mul(&g_obj.adjoint()));
        match crate::linalg::herm_eig(&gram) {
            Ok(eig) => {
                let j_sens: f64 = eig
                    .values
                    .iter()
                    .map(|l| 1.0 / l.max(f64::MIN_POSITIVE).sqrt())
                    .sum();
                1.0 / (j_sens * j_sens).sqrt().max(f64::MIN_POSITIVE)
            }
            Err(_) => 1.0,
        }
    };

    // Y11 = G Rx G^H.
    for row in 0..n {
        for col in row..n {
            let diag = row == col;
            let mut re_row = HermConstraint::eq(0.0).with_term(
                y_block,
                HermCoeff::Sparse(vec![(row, col, c(if diag { 1.0 } else { 0.5 }, 0.0))]),
            );
            for &b in rx_blocks {
                re_row = re_row.with_term(b, tie_re_terms(&cols, row, col));
            }
            if let Some(m) = t_cov {
                re_row = re_row.with_free(0, -m[(row, col)].re);
            }
            p.constraints.push(re_row);
            if !diag {
                let mut im_row = HermConstraint::eq(0.0)
                    .with_term(y_block, HermCoeff::Sparse(vec![(row, col, c(0.0, 0.5))]));
                for &b in rx_blocks {
                    im_row = im_row.with_term(b, tie_im_terms(&cols, row, col));
                }
                if let Some(m) = t_cov {
                    im_row = im_row.with_free(0, -m[(row, col)].im);
                }
                p.constraints.push(im_row);
            }
        }
    }

    // Y12 = c I.
    for row in 0..n {
        for col in 0..n {
            p.constraints.push(
                HermConstraint::eq(if row == col { ident_scale } else { 0.0 }).with_term(
                    y_block,
                    HermCoeff::Sparse(vec![(row, n + col, c(0.5, 0.0))]),
                ),
            );
            p.constraints.push(
                HermConstraint::eq(0.0).with_term(
                    y_block,
                    HermCoeff::Sparse(vec![(row, n + col, c(0.0, 0.5))]),
                ),
            );
        }
    }

    // Y22 = U.
    for row in 0..n {
        for col in row..n {
            let diag = row == col;
            let w = if diag { 1.0 } else { 0.5 };
            p.constraints.push(
                HermConstraint::eq(0.0)
                    .with_term(
                        y_block,
                        HermCoeff::Sparse(vec![(n + row, n + col, c(w, 0.0))]),
                    )
                    .with_term(u_block, HermCoeff::Sparse(vec![(row, col, c(-w, 0.0))])),
            );
            if !diag {
                p.constraints.push(
                    HermConstraint::eq(0.0)
                        .with_term(
                            y_block,
                            HermCoeff::Sparse(vec![(n + row, n + col, c(0.0, 0.5))]),
                        )
                        .with_term(u_block, HermCoeff::Sparse(vec![(row, col, c(0.0, -0.5))])),
                );
            }
        }
    }

    ident_scale
}

/// SINR row in lifted variables, normalized so coefficients are O(1):
/// `tr(Hu W_k) - Gamma sum_{i!=k} tr(Hu W_i) - Gamma tr(Hu R0) >= rhs` with
/// `Hu` the unit-norm channel outer product.
fn sinr_row(
    h: &[Vec<Complex64>],
    k: usize,
    w_blocks: &[usize],
    r0_block: Option<usize>,
    gamma_k: f64,
    sigma_sq: f64,
) -> HermConstraint {
    let hk = &h[k];
    let norm = vec_norm(hk).max(f64::MIN_POSITIVE);
    let hu: Vec<Complex64> = hk.iter().map(|z| z / norm).collect();
    let rhs = gamma_k * sigma_sq / (norm * norm);
    let mut row = HermConstraint::ge(rhs);
    for (i, &b) in w_blocks.iter().enumerate() {
        let lam = if i == k { 1.0 } else { -gamma_k };
        row = row.with_term(b, HermCoeff::Rank(vec![(lam, hu.clone())]));
    }
    if let Some(b) = r0_block {
        row = row.with_term(b, HermCoeff::Rank(vec![(-gamma_k, hu.clone())]));
    }
    row
}

fn power_row(w_blocks: &[usize], r0_block: Option<usize>, m: usize, budget: f64) -> HermConstraint {
    let mut row = HermConstraint::ge(-budget);
    for &b in w_blocks {
        row = row.with_term(b, HermCoeff::scaled_identity(m, -1.0));
    }
    if let Some(b) = r0_block {
        row = row.with_term(b, HermCoeff::scaled_identity(m, -1.0));
    }
    row
}

fn solver_failure(status: SdpStatus, sol: &crate::sdp::HermSdpSolution) -> BeamformError {
    BeamformError::SolverFailure {
        status,
        pres: sol.primal_residual,
        dres: sol.dual_residual,
        gap: sol.gap,
    }
}

/// Marginally feasible instances can stall the interior point method with
/// the duality gap around 1e-7; the iterate is still primal-feasible to
/// ~1e-9 and loses at most that gap in optimality, which downstream
/// monotonicity safeguards absorb. Accept such solves.
pub(super) fn usable(sol: &crate::sdp::HermSdpSolution) -> bool {
    match sol.status {
        SdpStatus::Optimal => true,
        SdpStatus::NumericalFailure => {
            sol.primal_residual <= 1e-7 && sol.dual_residual <= 1e-6 && sol.gap <= 1e-6
        }
        _ => false,
    }
}

/// Prop.-style rank-one recovery: `w_k = (h_k^H W_k h_k)^{-1/2} W_k h_k`,
/// `R0 = R0~ + sum W_k~ - sum w_k w_k^H`. Preserves the covariance sum, the
/// objective, and every constraint; `h_k^H w_k` comes out real positive.
pub fn rank_one_reconstruct(
    w_tilde: &[HermitianMatrix],
    r0_tilde: &HermitianMatrix,
    h: &[Vec<Complex64>],
) -> Result<(Vec<Vec<Complex64>>, HermitianMatrix), BeamformError> {
    assert_eq!(w_tilde.len(), h.len());
    let mut beams = Vec::with_capacity(w_tilde.len());
    let mut r0 = r0_tilde.as_matrix().clone();
    for (k, (wt, hk)) in w_tilde.iter().zip(h).enumerate() {
        let wh = wt.as_matrix().matvec(hk);
        let quad = cdot(hk, &wh).re;
        let scale = wt.trace() * vec_norm(hk).powi(2);
        if quad <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(BeamformError::DegenerateBeam { k, value: quad });
        }
        let inv_sqrt = 1.0 / quad.sqrt();
        let w_star: Vec<Complex64> = wh.iter().map(|z| z * inv_sqrt).collect();
        r0 = r0.add(wt.as_matrix()).sub(&outer(&w_star, &w_star));
        beams.push(w_star);
    }
    Ok((beams, HermitianMatrix::symmetrized(r0)))
}

/// Relaxed transmit solution before the rank-one reconstruction, in scaled
/// units (`P0 = 1`, `max sigma^2 = 1`). Exposed so the SDR-tightness
/// identities can be verified against the reconstruction.
#[derive(Debug, Clone)]
pub struct TransmitRelaxation {
    /// Lifted per-user covariances `W~_k`.
    pub w_tilde: Vec<HermitianMatrix>,
    /// Lifted sensing covariance `R0~`.
    pub r0_tilde: HermitianMatrix,
    /// Combined channels the relaxation saw.
    pub h: Vec<Vec<Complex64>>,
    /// Thresholds (linear) and scaled noise powers, for constraint checks.
    pub gamma: Vec<f64>,
    pub sigma_k_sq: Vec<f64>,
    /// Solved `tr((G' Rx G'^H)^{-1})` in scaled units.
    pub objective: f64,
}

fn solve_relaxation(
    ch: &ChannelSet,
    v: &ReflectCoeffs,
    params: &SystemParams,
    receiver_type: ReceiverType,
) -> Result<StepResult<(TransmitRelaxation, ScaledSystem)>, BeamformError> {
    let scaled = ScaledSystem::new(ch, params);
    let dims = ch.dims();
    let h = combined_channel(&scaled.ch, v);

    let mut p = HermSdpProblem::new();
    let w_blocks: Vec<usize> = (0..dims.k)
        .map(|k| p.add_block(format!("W{k}"), dims.m))
        .collect();
    let r0_block = p.add_block("R0", dims.m);
    let mut rx_blocks = w_blocks.clone();
    rx_blocks.push(r0_block);
    let ident_scale = add_crb_epigraph(&mut p, &scaled.g_obj, &rx_blocks, None);
    for k in 0..dims.k {
        let r0_in_sinr = match receiver_type {
            ReceiverType::I => Some(r0_block),
            ReceiverType::II => None,
        };
        p.constraints.push(sinr_row(
            &h,
            k,
            &w_blocks,
            r0_in_sinr,
            scaled.params.gamma[k],
            scaled.ch.sigma_k_sq[k],
        ));
    }
    p.constraints
        .push(power_row(&w_blocks, Some(r0_block), dims.m, 1.0));

    let sol = solve_hermitian(&p)?;
    if !usable(&sol) {
        if sol.status == SdpStatus::Infeasible {
            return Ok(StepResult::Infeasible);
        }
        return Err(solver_failure(sol.status, &sol));
    }

    let w_tilde: Vec<HermitianMatrix> = w_blocks.iter().map(|&b| sol.blocks[b].clone()).collect();
    let relaxation = TransmitRelaxation {
        w_tilde,
        r0_tilde: sol.blocks[r0_block].clone(),
        h,
        gamma: scaled.params.gamma.clone(),
        sigma_k_sq: scaled.ch.sigma_k_sq.clone(),
        objective: sol.objective / (ident_scale * ident_scale),
    };
    Ok(StepResult::Feasible((relaxation, scaled)))
}

/// Solves the transmit SDR and returns the lifted solution (scaled units).
pub fn transmit_relaxation(
    ch: &ChannelSet,
    v: &ReflectCoeffs,
    params: &SystemParams,
    receiver_type: ReceiverType,
) -> Result<StepResult<TransmitRelaxation>, BeamformError> {
    Ok(match solve_relaxation(ch, v, params, receiver_type)? {
        StepResult::Feasible((relaxation, _)) => StepResult::Feasible(relaxation),
        StepResult::Infeasible => StepResult::Infeasible,
    })
}

/// One transmit beamforming step: solves the SDR under fixed reflection
/// coefficients and recovers the optimal rank-one design.
pub fn transmit_step(
    ch: &ChannelSet,
    v: &ReflectCoeffs,
    params: &SystemParams,
    receiver_type: ReceiverType,
) -> Result<StepResult<TransmitDesign>, BeamformError> {
    let (relaxation, scaled) = match solve_relaxation(ch, v, params, receiver_type)? {
        StepResult::Feasible(r) => r,
        StepResult::Infeasible => return Ok(StepResult::Infeasible),
    };
    let (beams, r0) =
        rank_one_reconstruct(&relaxation.w_tilde, &relaxation.r0_tilde, &relaxation.h)?;
    let design_scaled = TransmitDesign { w: beams, r0 };
    Ok(StepResult::Feasible(scaled.design_to_physical(&design_scaled)))
}

/// Stage-1 step of the separate-design benchmark: minimize information-beam
/// power subject to sensing-free SINR constraints. Returns physical beams.
pub(super) fn power_min_step(
    ch: &ChannelSet,
    v: &ReflectCoeffs,
    params: &SystemParams,
) -> Result<StepResult<Vec<Vec<Complex64>>>, BeamformError> {
    let scaled = ScaledSystem::new(ch, params);
    let dims = ch.dims();
    let h = combined_channel(&scaled.ch, v);

    let mut p = HermSdpProblem::new();
    let w_blocks: Vec<usize> = (0..dims.k)
        .map(|k| p.add_block(format!("W{k}"), dims.m))
        .collect();
    for &b in &w_blocks {
        p.objective.push((b, HermCoeff::identity(dims.m)));
    }
    for k in 0..dims.k {
        p.constraints.push(sinr_row(
            &h,
            k,
            &w_blocks,
            None,
            scaled.params.gamma[k],
            scaled.ch.sigma_k_sq[k],
        ));
    }

    let sol = solve_hermitian(&p)?;
    if !usable(&sol) {
        if sol.status == SdpStatus::Infeasible {
            return Ok(StepResult::Infeasible);
        }
        return Err(solver_failure(sol.status, &sol));
    }
    let w_tilde: Vec<HermitianMatrix> = w_blocks.iter().map(|&b| sol.blocks[b].clone()).collect();
    let (beams, _leftover) = rank_one_reconstruct(&w_tilde, &HermitianMatrix::zeros(dims.m), &h)?;
    // Physical units: the SDP variables are per-unit-P0.
    let amp = params.p0.sqrt();
    Ok(StepResult::Feasible(
        beams
            .into_iter()
            .map(|w| w.into_iter().map(|z| z * amp).collect())
            .collect(),
    ))
}

/// Stage-2 step of the separate-design benchmark: with beam directions
/// frozen, choose the common power scale `t = alpha^2 >= 1` and the sensing
/// covariance minimizing the CRB.
pub(super) fn sensing_top_up(
    ch: &ChannelSet,
    v: &ReflectCoeffs,
    beams_physical: &[Vec<Complex64>],
    params: &SystemParams,
    receiver_type: ReceiverType,
) -> Result<StepResult<TransmitDesign>, BeamformError> {
    let scaled = ScaledSystem::new(ch, params);
    let dims = ch.dims();
    let h = combined_channel(&scaled.ch, v);
    let inv_amp = 1.0 / params.p0.sqrt();
    let beams: Vec<Vec<Complex64>> = beams_physical
        .iter()
        .map(|w| w.iter().map(|z| z * inv_amp).collect())
        .collect();

    let info_power: f64 = beams.iter().map(|w| vec_norm(w).powi(2)).sum();
    if info_power > 1.0 + 1e-9 {
        return Ok(StepResult::Infeasible);
    }

    // Fixed part of the covariance and its image under G.
    let mut w_sum = CMatrix::zeros(dims.m, dims.m);
    for w in &beams {
        w_sum = w_sum.add(&outer(w, w));
    }
    let t_cov = scaled.g_obj.mul(&w_sum).mul(&scaled.g_obj.adjoint());

    // Per-user sensing-free margins of the frozen beams.
    let margins: Vec<f64> = (0..dims.k)
        .map(|k| {
            let desired = cdot(&h[k], &beams[k]).norm_sqr() / scaled.params.gamma[k];
            let interference: f64 = (0..dims.k)
                .filter(|&i| i != k)
                .map(|i| cdot(&h[k], &beams[i]).norm_sqr())
                .sum();
            desired - interference
        })
        .collect();

    let mut p = HermSdpProblem::new();
    p.free_vars = 1;
    p.objective_free = vec![0.0];
    let r0_block = p.add_block("R0", dims.m);
    let _ = add_crb_epigraph(&mut p, &scaled.g_obj, &[r0_block], Some(&t_cov));
    // t >= 1.
    p.constraints.push(HermConstraint::ge(1.0).with_free(0, 1.0));
    // t * info_power + tr(R0) <= 1.
    p.constraints.push(
        HermConstraint::ge(-1.0)
            .with_free(0, -info_power)
            .with_term(r0_block, HermCoeff::scaled_identity(dims.m, -1.0)),
    );
    // SINR: t * margin_k - [Type I] h^H R0 h >= sigma^2.
    for k in 0..dims.k {
        let row_scale = 1.0 / (1.0 + margins[k].abs());
        let mut row = HermConstraint::ge(scaled.ch.sigma_k_sq[k] * row_scale)
            .with_free(0, margins[k] * row_scale);
        if receiver_type == ReceiverType::I {
            row = row.with_term(r0_block, HermCoeff::Rank(vec![(-row_scale, h[k].clone())]));
        }
        p.constraints.push(row);
    }

    let sol = solve_hermitian(&p)?;
    if !usable(&sol) {
        if sol.status == SdpStatus::Infeasible {
            return Ok(StepResult::Infeasible);
        }
        return Err(solver_failure(sol.status, &sol));
    }
    let t = sol.free_values[0].max(1.0);
    let amp = t.sqrt();
    let design_scaled = TransmitDesign {
        w: beams
            .iter()
            .map(|w| w.iter().map(|z| z * amp).collect())
            .collect(),
        r0: sol.blocks[r0_block].clone(),
    };
    Ok(StepResult::Feasible(scaled.design_to_physical(&design_scaled)))
}

#[cfg(test)]
pub(crate) fn tie_coefficients_for_test(
    g_obj: &CMatrix,
    p: usize,
    q: usize,
) -> (HermCoeff, Option<HermCoeff>) {
    let cols = gh_columns(g_obj);
    let re = tie_re_terms(&cols, p, q);
    let im = if p == q {
        None
    } else {
        Some(tie_im_terms(&cols, p, q))
    };
    (re, im)
}
