//! Echo simulation and least-squares estimation of the target response.
//!
//! The BS observes `Y = G^T Phi^T H Phi G X + N` over a block of `T`
//! symbols and estimates the IRS-side target response matrix `H`. The
//! least-squares estimator is exactly efficient for this linear Gaussian
//! model, so its empirical mean squared error reproduces the CRB evaluated
//! at the realized sample covariance; that equality is the module's reason
//! to exist — it validates the bound the optimizer minimizes.

use num_complex::Complex64;
use thiserror::Error;

use crate::channel::ChannelSet;
use crate::linalg::{
    herm_eig, psd_factor, solve_psd, CMatrix, HermitianMatrix, LinalgError, PD_REL_TOL,
};
use crate::rng::StreamRng;
use crate::system::{ReflectCoeffs, TransmitDesign};

const TAG_SYMBOLS: u64 = 0xE0;
const TAG_NOISE: u64 = 0xE1;
const TAG_SCATTER: u64 = 0xE2;

#[derive(Debug, Error)]
pub enum SensingError {
    #[error("empirical MSE needs at least 100 trials (got {0})")]
    TooFewTrials(usize),
    #[error("rank-deficient {factor} factor in the least-squares normal equations")]
    RankDeficient { factor: &'static str },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Target response matrix w.r.t. the IRS (the IRS-target-IRS cascade).
#[derive(Debug, Clone, PartialEq)]
pub struct TargetResponse {
    pub h: CMatrix,
}

impl TargetResponse {
    pub fn new(h: CMatrix) -> Self {
        assert_eq!(h.rows(), h.cols(), "target response must be square");
        assert!(h.is_finite(), "target response must be finite");
        Self { h }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            h: CMatrix::zeros(n, n),
        }
    }

    /// Extended target as a sum of `n_scatterers` rank-one scatterer
    /// responses; `symmetric` selects the reciprocal form `a a^T`.
    pub fn random_scatterers(n: usize, n_scatterers: usize, symmetric: bool, seed: u64) -> Self {
        let mut rng = StreamRng::new(seed).derive(&[TAG_SCATTER]);
        let mut h = CMatrix::zeros(n, n);
        for _ in 0..n_scatterers {
            let gain = rng.complex_normal();
            let a: Vec<Complex64> = (0..n).map(|_| rng.complex_normal()).collect();
            let b: Vec<Complex64> = if symmetric {
                a.clone()
            } else {
                (0..n).map(|_| rng.complex_normal()).collect()
            };
            for i in 0..n {
                for j in 0..n {
                    h[(i, j)] += gain * a[i] * b[j];
                }
            }
        }
        Self { h }
    }

    pub fn dim(&self) -> usize {
        self.h.rows()
    }
}

/// One transmit/echo block.
#[derive(Debug, Clone)]
pub struct EchoBatch {
    /// Transmitted samples, M x T.
    pub x: CMatrix,
    /// Received echo samples, M x T.
    pub y: CMatrix,
    pub sigma_r_sq: f64,
}

impl EchoBatch {
    /// Realized sample covariance `X X^H / T`.
    pub fn sample_covariance(&self) -> HermitianMatrix {
        let t = self.x.cols() as f64;
        HermitianMatrix::symmetrized(
            self.x
                .mul(&self.x.adjoint())
                .scale(Complex64::new(1.0 / t, 0.0)),
        )
    }
}

/// Cascade `G^T Phi^T H Phi G` seen by the echo.
fn echo_channel(ch: &ChannelSet, v: &ReflectCoeffs, target: &TargetResponse) -> CMatrix {
    let phases = v.v();
    let n = ch.g.rows();
    assert_eq!(target.dim(), n, "target response dim must equal N");
    // Phi G scales row n of G by v_n.
    let phi_g = CMatrix::from_fn(n, ch.g.cols(), |i, j| phases[i] * ch.g[(i, j)]);
    phi_g.transpose().mul(&target.h).mul(&phi_g)
}

/// Draws the transmitted block `X` (information symbols plus sensing
/// samples realizing the design covariance).
fn transmit_block(
    design: &TransmitDesign,
    t_symbols: usize,
    rng: &mut StreamRng,
) -> Result<CMatrix, SensingError> {
    let m = design.r0.dim();
    let l0 = psd_factor(&design.r0)?;
    let mut x = CMatrix::zeros(m, t_symbols);
    for t in 0..t_symbols {
        let mut col = vec![Complex64::ZERO; m];
        for w in &design.w {
            let s = rng.complex_normal();
            for i in 0..m {
                col[i] += w[i] * s;
            }
        }
        let z: Vec<Complex64> = (0..m).map(|_| rng.complex_normal()).collect();
        let sensing = l0.matvec(&z);
        for i in 0..m {
            x[(i, t)] = col[i] + sensing[i];
        }
    }
    Ok(x)
}

/// Simulates one echo block: information + sensing transmit samples through
/// the IRS-target cascade plus receiver noise.
pub fn simulate_echo(
    ch: &ChannelSet,
    v: &ReflectCoeffs,
    design: &TransmitDesign,
    target: &TargetResponse,
    t_symbols: usize,
    seed: u64,
) -> Result<EchoBatch, SensingError> {
    assert!(t_symbols >= 1);
    let root = StreamRng::new(seed);
    let mut sym_rng = root.derive(&[TAG_SYMBOLS]);
    let x = transmit_block(design, t_symbols, &mut sym_rng)?;
    let cascade = echo_channel(ch, v, target);
    let mut y = cascade.mul(&x);
    let sigma = ch.sigma_r_sq.sqrt();
    let mut noise_rng = root.derive(&[TAG_NOISE]);
    for t in 0..t_symbols {
        for i in 0..y.rows() {
            let z = noise_rng.complex_normal() * sigma;
            y[(i, t)] += z;
        }
    }
    Ok(EchoBatch {
        x,
        y,
        sigma_r_sq: ch.sigma_r_sq,
    })
}

/// Least-squares estimate of the target response from one batch:
/// `argmin_H || Y - A H C ||_F` with `A = G^T Phi^T` and `C = Phi G X`,
/// solved through the normal equations.
pub fn ls_estimate(
    batch: &EchoBatch,
    ch: &ChannelSet,
    v: &ReflectCoeffs,
) -> Result<TargetResponse, SensingError> {
    let phases = v.v();
    let n = ch.g.rows();
    let phi_g = CMatrix::from_fn(n, ch.g.cols(), |i, j| phases[i] * ch.g[(i, j)]);
    let a = phi_g.transpose(); // M x N
    let c = phi_g.mul(&batch.x); // N x T

    let gram_a = HermitianMatrix::symmetrized(a.adjoint().mul(&a));
    check_rank(&gram_a, "left (G^T Phi^T)")?;
    let gram_c = HermitianMatrix::symmetrized(c.mul(&c.adjoint()));
    check_rank(&gram_c, "right (Phi G X)")?;

    // H = (A^H A)^-1 A^H Y C^H (C C^H)^-1
    let ay = a.adjoint().mul(&batch.y);
    let left = solve_psd(&gram_a, &ay)?;
    let lc = left.mul(&c.adjoint());
    // Right-solve via the transposed Hermitian system:
    // Z (C C^H) = LC  <=>  (C C^H)^T Z^T = LC^T.
    let gram_c_t = HermitianMatrix::symmetrized(gram_c.as_matrix().transpose());
    let zt = solve_psd(&gram_c_t, &lc.transpose())?;
    Ok(TargetResponse {
        h: zt.transpose(),
    })
}

fn check_rank(gram: &HermitianMatrix, factor: &'static str) -> Result<(), SensingError> {
    let eig = herm_eig(gram)?;
    let max = eig.values.last().copied().unwrap_or(0.0);
    if max <= 0.0 || eig.values[0] <= PD_REL_TOL * max {
        return Err(SensingError::RankDeficient { factor });
    }
    Ok(())
}

/// Empirical mean squared error of the LS estimator.
#[derive(Debug, Clone)]
pub struct EmpiricalMse {
    pub mean: f64,
    /// Per-trial squared errors, for variance reporting.
    pub trials: Vec<f64>,
    /// The realized sample covariance shared by all trials.
    pub sample_covariance: HermitianMatrix,
}

impl EmpiricalMse {
    pub fn variance(&self) -> f64 {
        let n = self.trials.len() as f64;
        self.trials
            .iter()
            .map(|&e| (e - self.mean) * (e - self.mean))
            .sum::<f64>()
            / (n - 1.0).max(1.0)
    }
}

/// Monte-Carlo MSE of the LS estimator: one transmit block held fixed,
/// fresh receiver noise per trial.
pub fn empirical_mse(
    ch: &ChannelSet,
    v: &ReflectCoeffs,
    design: &TransmitDesign,
    target: &TargetResponse,
    t_symbols: usize,
    n_trials: usize,
    seed: u64,
) -> Result<EmpiricalMse, SensingError> {
    if n_trials < 100 {
        return Err(SensingError::TooFewTrials(n_trials));
    }
    let root = StreamRng::new(seed);
    let mut sym_rng = root.derive(&[TAG_SYMBOLS]);
    let x = transmit_block(design, t_symbols, &mut sym_rng)?;
    let cascade = echo_channel(ch, v, target);
    let y_clean = cascade.mul(&x);
    let sigma = ch.sigma_r_sq.sqrt();
    let m = y_clean.rows();

    let mut trials = Vec::with_capacity(n_trials);
    let mut batch = EchoBatch {
        x,
        y: CMatrix::zeros(m, t_symbols),
        sigma_r_sq: ch.sigma_r_sq,
    };
    for trial in 0..n_trials {
        let mut noise_rng = root.derive(&[TAG_NOISE, trial as u64]);
        for t in 0..t_symbols {
            for i in 0..m {
                batch.y[(i, t)] = y_clean[(i, t)] + noise_rng.complex_normal() * sigma;
            }
        }
        let est = ls_estimate(&batch, ch, v)?;
        let err = est.h.sub(&target.h).fro_norm();
        trials.push(err * err);
    }
    let mean = trials.iter().sum::<f64>() / n_trials as f64;
    Ok(EmpiricalMse {
        mean,
        trials,
        sample_covariance: batch.sample_covariance(),
    })
}
