//! Joint transmit and reflective beamforming.
//!
//! The CRB-minimization problem is non-convex jointly in the transmit
//! design and the reflection coefficients, but each block is tractable:
//!
//! - For fixed reflection coefficients, the transmit design is found by
//!   semidefinite relaxation ([`transmit_step`]) whose optimum is recovered
//!   in closed form as rank-one beamformers plus a sensing covariance
//!   ([`rank_one_reconstruct`]) — the relaxation is tight.
//! - For a fixed transmit design the CRB does not depend on the reflection
//!   at all, so the reflective update ([`reflective_step`]) maximizes
//!   per-user SINR slack via an SDR with Gaussian randomization, enlarging
//!   the next transmit step's feasible set. Candidates never fall below the
//!   incumbent, which makes the alternation monotone.
//! - [`alternating_optimize`] ties the two together until the CRB stops
//!   decreasing; [`benchmark_transmit_only`] and [`benchmark_separate`] are
//!   the two reference schemes used for comparison.
//!
//! All optimization runs on an exactly rescaled copy of the system (see
//! [`ScaledSystem`]) so the interior-point solver sees O(1) data.

mod reflective;
mod transmit;

pub use reflective::reflective_step;
pub use transmit::{rank_one_reconstruct, transmit_relaxation, transmit_step, TransmitRelaxation};

use thiserror::Error;

use crate::channel::ChannelSet;
use crate::rng::StreamRng;
use crate::sdp::{SdpError, SdpStatus};
use crate::system::{
    combined_channel, crb, sinr_slacks, ReceiverType, ReflectCoeffs, ScaledSystem, SystemError,
    SystemParams, TransmitDesign,
};

const TAG_AO_INIT: u64 = 0xA0;
const TAG_AO_REFLECT: u64 = 0xA1;
const TAG_BENCH_PHASES: u64 = 0xB0;

#[derive(Debug, Error)]
pub enum BeamformError {
    #[error("SDP construction failed: {0}")]
    Sdp(#[from] SdpError),
    #[error("SDP solver failed (status {status:?}, residuals p={pres:.2e} d={dres:.2e} gap={gap:.2e})")]
    SolverFailure {
        status: SdpStatus,
        pres: f64,
        dres: f64,
        gap: f64,
    },
    #[error("degenerate beam for CU {k}: h^H W h = {value:.3e} (relaxation returned a vanishing beam)")]
    DegenerateBeam { k: usize, value: f64 },
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Outcome of a single convex step: a solution or a certified infeasibility.
#[derive(Debug, Clone)]
pub enum StepResult<T> {
    Feasible(T),
    Infeasible,
}

/// Alternating-optimization knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct AoConfig {
    pub max_outer_iters: usize,
    /// Relative CRB decrease below which the loop stops.
    pub rel_tol: f64,
    /// Gaussian randomization samples per reflective step.
    pub n_randomizations: usize,
    /// Fresh random initializations tried when the first transmit SDP is
    /// infeasible.
    pub max_v_resamples: usize,
    pub receiver_type: ReceiverType,
}

impl AoConfig {
    pub fn for_receiver(receiver_type: ReceiverType) -> Self {
        Self {
            max_outer_iters: 30,
            rel_tol: 1e-3,
            n_randomizations: 256,
            max_v_resamples: 50,
            receiver_type,
        }
    }

    pub fn validate(&self) -> Result<(), SystemError> {
        if self.max_outer_iters == 0 || self.n_randomizations == 0 {
            return Err(SystemError::BadParameter("AO counts must be positive"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(SystemError::BadParameter("rel_tol must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AoStatus {
    Converged,
    IterCap,
    Infeasible,
}

impl AoStatus {
    pub fn label(&self) -> &'static str {
        match self {
            AoStatus::Converged => "converged",
            AoStatus::IterCap => "iter_cap",
            AoStatus::Infeasible => "infeasible",
        }
    }
}

/// Result of one optimization run (any scheme).
#[derive(Debug, Clone)]
pub struct AoSolution {
    pub design: TransmitDesign,
    pub v: ReflectCoeffs,
    /// CRB after each transmit step (non-increasing).
    pub crb_trace: Vec<f64>,
    pub status: AoStatus,
    pub outer_iters: usize,
}

impl AoSolution {
    pub fn final_crb(&self) -> Option<f64> {
        self.crb_trace.last().copied()
    }

    fn infeasible(m: usize, k: usize, v: ReflectCoeffs, outer_iters: usize) -> Self {
        AoSolution {
            design: TransmitDesign::zero(m, k),
            v,
            crb_trace: vec![],
            status: AoStatus::Infeasible,
            outer_iters,
        }
    }
}

fn random_phases(rng: &mut StreamRng, n: usize) -> ReflectCoeffs {
    ReflectCoeffs::from_phases((0..n).map(|_| rng.uniform_phase()).collect())
}

/// Alternating optimization: transmit SDR and reflective SDR in turn,
/// starting from random phases, until the relative CRB decrease falls below
/// `ao.rel_tol`. Deterministic given `(seed, config)`.
pub fn alternating_optimize(
    ch: &ChannelSet,
    params: &SystemParams,
    ao: &AoConfig,
    seed: u64,
) -> Result<AoSolution, BeamformError> {
    ao.validate()?;
    params.validate()?;
    let dims = ch.dims();
    let root = StreamRng::new(seed);
    let mut init_rng = root.derive(&[TAG_AO_INIT]);

    // Random-phase initialization, resampled while the transmit SDP is
    // infeasible.
    let mut v = random_phases(&mut init_rng, dims.n);
    let mut design = None;
    for _ in 0..=ao.max_v_resamples {
        match transmit_step(ch, &v, params, ao.receiver_type)? {
            StepResult::Feasible(d) => {
                design = Some(d);
                break;
            }
            StepResult::Infeasible => {
                v = random_phases(&mut init_rng, dims.n);
            }
        }
    }
    let Some(mut design) = design else {
        return Ok(AoSolution::infeasible(dims.m, dims.k, v, 0));
    };

    let mut crb_trace = vec![crb(&ch.g, &design.rx(), ch.sigma_r_sq, params.t_symbols)?];
    let mut status = AoStatus::IterCap;
    let mut outer_iters = 1;
    for iter in 1..ao.max_outer_iters {
        let mut refl_rng = root.derive(&[TAG_AO_REFLECT, iter as u64]);
        let v_next = reflective_step(
            ch,
            &design,
            &v,
            params,
            ao.receiver_type,
            ao.n_randomizations,
            &mut refl_rng,
        )?;
        let next_design = match transmit_step(ch, &v_next, params, ao.receiver_type)? {
            StepResult::Feasible(d) => d,
            StepResult::Infeasible => {
                // The incumbent design stays feasible under v_next by the
                // non-worsening slack guarantee; an infeasible re-solve is a
                // borderline numerical artifact, so keep what we have.
                log::warn!("transmit SDP reported infeasible during AO; keeping incumbent");
                status = AoStatus::Converged;
                break;
            }
        };
        let now = crb(&ch.g, &next_design.rx(), ch.sigma_r_sq, params.t_symbols)?;
        let prev = *crb_trace.last().expect("trace non-empty");
        if now > prev {
            // Below solver precision: a nominally optimal re-solve came out
            // a hair worse. The alternation has converged; keep the better
            // iterate so the trace stays monotone.
            status = AoStatus::Converged;
            break;
        }
        v = v_next;
        design = next_design;
        outer_iters = iter + 1;
        crb_trace.push(now);
        if (prev - now) / prev.abs().max(f64::MIN_POSITIVE) < ao.rel_tol {
            status = AoStatus::Converged;
            break;
        }
    }

    Ok(AoSolution {
        design,
        v,
        crb_trace,
        status,
        outer_iters,
    })
}

/// Benchmark: transmit beamforming only, under fixed random phase shifts.
pub fn benchmark_transmit_only(
    ch: &ChannelSet,
    params: &SystemParams,
    receiver_type: ReceiverType,
    seed: u64,
) -> Result<AoSolution, BeamformError> {
    params.validate()?;
    let dims = ch.dims();
    let mut rng = StreamRng::new(seed).derive(&[TAG_BENCH_PHASES]);
    let v = random_phases(&mut rng, dims.n);
    match transmit_step(ch, &v, params, receiver_type)? {
        StepResult::Feasible(design) => {
            let value = crb(&ch.g, &design.rx(), ch.sigma_r_sq, params.t_symbols)?;
            Ok(AoSolution {
                design,
                v,
                crb_trace: vec![value],
                status: AoStatus::Converged,
                outer_iters: 1,
            })
        }
        StepResult::Infeasible => Ok(AoSolution::infeasible(dims.m, dims.k, v, 1)),
    }
}

/// Benchmark: separate information and sensing beamforming.
///
/// Stage 1 alternates transmit power minimization (information beams only,
/// sensing-free SINR constraints) with the reflective feasibility step.
/// Stage 2 freezes the beam directions, then jointly picks the power scale
/// `t = alpha^2 >= 1` and the sensing covariance to minimize the CRB.
pub fn benchmark_separate(
    ch: &ChannelSet,
    params: &SystemParams,
    receiver_type: ReceiverType,
    seed: u64,
) -> Result<AoSolution, BeamformError> {
    params.validate()?;
    let dims = ch.dims();
    let root = StreamRng::new(seed);
    let mut rng = root.derive(&[TAG_BENCH_PHASES]);
    let mut v = random_phases(&mut rng, dims.n);

    // Stage 1: minimize information-beam power subject to SINR.
    const MAX_STAGE1_ALTERNATIONS: usize = 20;
    let rel_tol = 1e-3;
    let mut beams = match transmit::power_min_step(ch, &v, params)? {
        StepResult::Feasible(b) => b,
        StepResult::Infeasible => {
            return Ok(AoSolution::infeasible(dims.m, dims.k, v, 0));
        }
    };
    let mut power = beams_power(&beams);
    let mut alternations = 1;
    for iter in 1..MAX_STAGE1_ALTERNATIONS {
        let info_design = TransmitDesign {
            w: beams.clone(),
            r0: crate::linalg::HermitianMatrix::zeros(dims.m),
        };
        let mut refl_rng = root.derive(&[TAG_AO_REFLECT, iter as u64]);
        let v_next = reflective_step(
            ch,
            &info_design,
            &v,
            params,
            // Sensing-free constraints: with R0 = 0 both receiver types
            // coincide.
            ReceiverType::II,
            256,
            &mut refl_rng,
        )?;
        let next = match transmit::power_min_step(ch, &v_next, params)? {
            StepResult::Feasible(b) => b,
            StepResult::Infeasible => break,
        };
        v = v_next;
        beams = next;
        alternations = iter + 1;
        let next_power = beams_power(&beams);
        let drop = (power - next_power) / power.max(f64::MIN_POSITIVE);
        power = next_power;
        if drop < rel_tol {
            break;
        }
    }

    // Stage 2: scale the frozen beams and add a sensing covariance.
    match transmit::sensing_top_up(ch, &v, &beams, params, receiver_type)? {
        StepResult::Feasible(design) => {
            let value = crb(&ch.g, &design.rx(), ch.sigma_r_sq, params.t_symbols)?;
            Ok(AoSolution {
                design,
                v,
                crb_trace: vec![value],
                status: AoStatus::Converged,
                outer_iters: alternations,
            })
        }
        StepResult::Infeasible => Ok(AoSolution::infeasible(dims.m, dims.k, v, alternations)),
    }
}

fn beams_power(beams: &[Vec<num_complex::Complex64>]) -> f64 {
    beams
        .iter()
        .map(|w| w.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum()
}

/// Exact feasibility margin of a (design, v) pair: min over CUs of the SINR
/// slack, in scaled units.
pub fn min_sinr_slack(
    ch: &ChannelSet,
    design: &TransmitDesign,
    v: &ReflectCoeffs,
    params: &SystemParams,
    receiver_type: ReceiverType,
) -> f64 {
    let scaled = ScaledSystem::new(ch, params);
    let design_scaled = design.scale_power(1.0 / params.p0);
    let h = combined_channel(&scaled.ch, v);
    sinr_slacks(
        &design_scaled,
        &h,
        &scaled.params.gamma,
        &scaled.ch.sigma_k_sq,
        receiver_type,
    )
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests;
