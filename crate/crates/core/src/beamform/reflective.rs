//! Reflective beamforming: SINR-slack maximization over unit-modulus
//! coefficients via SDR and Gaussian randomization.
//!
//! The lifted program maximizes `sum_k beta_k` over `V >= 0` with
//! `diag(V) = 1`, where `beta_k` lower-bounds the k-th SINR slack expressed
//! through the lifted quadratic forms. Candidates are drawn as
//! `CN(0, V)` samples projected to unit modulus, plus the principal
//! eigenvector rounding and the incumbent; the exact slack picks the
//! winner, so the result never falls below the incumbent.

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::linalg::{herm_eig, psd_factor};
use crate::rng::StreamRng;
use crate::sdp::{solve_hermitian, HermCoeff, HermConstraint, HermSdpProblem, SdpStatus};
use crate::system::{
    combined_channel, reflect_quadratics, sinr_slacks, ReceiverType, ReflectCoeffs, ScaledSystem,
    SystemParams, TransmitDesign,
};

use super::BeamformError;

/// One reflective update. Returns coefficients whose minimum exact SINR
/// slack is at least the incumbent's.
///
/// Two lifted relaxations supply candidates: the sum-of-slacks program
/// (maximize `sum beta_k`) and, for K >= 2, a max-min variant (maximize the
/// common slack). The sum objective alone can park all of its margin on one
/// user and leave the lifted minimum at zero, in which case its samples
/// never explore the max-min region; pooling both fixes that. Selection is
/// always by exact minimum slack.
pub fn reflective_step(
    ch: &ChannelSet,
    design: &TransmitDesign,
    v_incumbent: &ReflectCoeffs,
    params: &SystemParams,
    receiver_type: ReceiverType,
    n_randomizations: usize,
    rng: &mut StreamRng,
) -> Result<ReflectCoeffs, BeamformError> {
    let scaled = ScaledSystem::new(ch, params);
    let design_scaled = design.scale_power(1.0 / params.p0);
    let dims = ch.dims();
    let n = dims.n;

    let lifted = reflect_quadratics(&scaled.ch, &design_scaled);

    // Per-user slack matrices D_k = Q[k][k]/Gamma - sum_{i!=k} Q[k][i]
    // - [Type I] Q0[k].
    let slack_mats: Vec<crate::linalg::HermitianMatrix> = (0..dims.k)
        .map(|k| {
            let mut d = lifted.q[k][k].scale(1.0 / scaled.params.gamma[k]);
            for i in 0..dims.k {
                if i != k {
                    d = d.sub(&lifted.q[k][i]);
                }
            }
            if receiver_type == ReceiverType::I {
                d = d.sub(&lifted.q0[k]);
            }
            d
        })
        .collect();

    let exact_min_slack = |cand: &ReflectCoeffs| -> f64 {
        let h = combined_channel(&scaled.ch, cand);
        sinr_slacks(
            &design_scaled,
            &h,
            &scaled.params.gamma,
            &scaled.ch.sigma_k_sq,
            receiver_type,
        )
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    };

    let mut best = v_incumbent.clone();
    let mut best_slack = exact_min_slack(v_incumbent);

    let mut lifted_solutions = Vec::new();
    match solve_sum_beta(&slack_mats, &scaled.ch.sigma_k_sq, n, dims.k)? {
        Some(v) => lifted_solutions.push(v),
        None => log::warn!("sum-slack reflective SDR did not reach optimality"),
    }
    if dims.k >= 2 {
        match solve_max_min(&slack_mats, &scaled.ch.sigma_k_sq, n, dims.k)? {
            Some(v) => lifted_solutions.push(v),
            None => log::warn!("max-min reflective SDR did not reach optimality"),
        }
    }

    let consider = |cand: ReflectCoeffs, best: &mut ReflectCoeffs, best_slack: &mut f64| {
        let slack = exact_min_slack(&cand);
        if slack > *best_slack {
            *best_slack = slack;
            *best = cand;
        }
    };

    for v_lifted in &lifted_solutions {
        // Principal-eigenvector rounding.
        if let Ok(eig) = herm_eig(v_lifted) {
            let principal: Vec<Complex64> = (0..=n).map(|i| eig.vectors[(i, n)]).collect();
            consider(delift(&principal, n), &mut best, &mut best_slack);
        }
        // Gaussian randomization: r ~ CN(0, V), projected to unit modulus.
        if let Ok(factor) = psd_factor(v_lifted) {
            for _ in 0..n_randomizations {
                let z: Vec<Complex64> = (0..=n).map(|_| rng.complex_normal()).collect();
                let r = factor.matvec(&z);
                consider(delift(&r, n), &mut best, &mut best_slack);
            }
        }
    }

    Ok(best)
}

fn lifted_base(n: usize) -> (HermSdpProblem, usize) {
    let mut p = HermSdpProblem::new();
    let v_block = p.add_block("V", n + 1);
    for idx in 0..=n {
        p.constraints.push(HermConstraint::eq(1.0).with_term(
            v_block,
            HermCoeff::Sparse(vec![(idx, idx, Complex64::ONE)]),
        ));
    }
    (p, v_block)
}

/// Paper-form relaxation: maximize `sum_k beta_k` with
/// `<D_k, V> - beta_k >= sigma_k^2`, `beta_k >= 0`.
fn solve_sum_beta(
    slack_mats: &[crate::linalg::HermitianMatrix],
    sigma_sq: &[f64],
    n: usize,
    k_total: usize,
) -> Result<Option<crate::linalg::HermitianMatrix>, BeamformError> {
    let (mut p, v_block) = lifted_base(n);
    let beta_blocks: Vec<usize> = (0..k_total)
        .map(|k| p.add_block(format!("beta{k}"), 1))
        .collect();
    for &b in &beta_blocks {
        p.objective.push((b, HermCoeff::scaled_identity(1, -1.0)));
    }
    for k in 0..k_total {
        let row_scale = 1.0 / (1.0 + slack_mats[k].as_matrix().fro_norm());
        p.constraints.push(
            HermConstraint::ge(sigma_sq[k] * row_scale)
                .with_term(
                    v_block,
                    HermCoeff::from_matrix(&slack_mats[k].scale(row_scale)),
                )
                .with_term(
                    beta_blocks[k],
                    HermCoeff::Sparse(vec![(0, 0, Complex64::new(-row_scale, 0.0))]),
                ),
        );
    }
    let sol = solve_hermitian(&p)?;
    Ok((sol.status == SdpStatus::Optimal).then(|| sol.blocks[0].clone()))
}

/// Max-min relaxation: maximize the common slack `t` (free, sign
/// unconstrained) with `<D_k, V> - t >= sigma_k^2`.
fn solve_max_min(
    slack_mats: &[crate::linalg::HermitianMatrix],
    sigma_sq: &[f64],
    n: usize,
    k_total: usize,
) -> Result<Option<crate::linalg::HermitianMatrix>, BeamformError> {
    let (mut p, v_block) = lifted_base(n);
    p.free_vars = 1;
    p.objective_free = vec![-1.0];
    for k in 0..k_total {
        let row_scale = 1.0 / (1.0 + slack_mats[k].as_matrix().fro_norm());
        p.constraints.push(
            HermConstraint::ge(sigma_sq[k] * row_scale)
                .with_term(
                    v_block,
                    HermCoeff::from_matrix(&slack_mats[k].scale(row_scale)),
                )
                .with_free(0, -row_scale),
        );
    }
    let sol = solve_hermitian(&p)?;
    Ok((sol.status == SdpStatus::Optimal).then(|| sol.blocks[0].clone()))
}

/// Projects a lifted sample to reflection phases: `phi_n = arg(r_n) -
/// arg(r_{N+1})`, referencing the homogenization coordinate.
fn delift(r: &[Complex64], n: usize) -> ReflectCoeffs {
    let base = if r[n].norm() > 0.0 { r[n].arg() } else { 0.0 };
    ReflectCoeffs::from_phases((0..n).map(|i| r[i].arg() - base).collect())
}

