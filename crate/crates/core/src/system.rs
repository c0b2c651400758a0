//! System-level metrics: combined channels, SINR, transmit power, the
//! estimation CRB, and the lifted quadratic forms used by reflective
//! beamforming.
//!
//! The CRB of the target-response estimate is
//! `sigma_R^2 / T * tr((G R_x G^H)^-1) * tr((G G^H)^-1)`, which depends on
//! the transmit covariance only; reflection coefficients enter solely
//! through the per-user SINR constraints.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ChannelSet;
use crate::linalg::{cdot, outer, trace_inv, CMatrix, HermitianMatrix, LinalgError};

/// CU receiver capability: Type I sees the dedicated sensing signal as
/// interference, Type II pre-cancels it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReceiverType {
    I,
    II,
}

impl ReceiverType {
    pub fn label(&self) -> &'static str {
        match self {
            ReceiverType::I => "I",
            ReceiverType::II => "II",
        }
    }
}

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("near-singular {factor} factor in CRB evaluation: {source}")]
    CrbNearSingular {
        factor: &'static str,
        source: LinalgError,
    },
    #[error("invalid system parameter: {0}")]
    BadParameter(&'static str),
}

/// Per-CU information beamformers plus the dedicated sensing covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitDesign {
    /// `w[k]`: M-dim beamformer for CU k.
    pub w: Vec<Vec<Complex64>>,
    /// Sensing covariance `R_0` (M x M, PSD).
    pub r0: HermitianMatrix,
}

impl TransmitDesign {
    pub fn zero(m: usize, k: usize) -> Self {
        Self {
            w: vec![vec![Complex64::ZERO; m]; k],
            r0: HermitianMatrix::zeros(m),
        }
    }

    /// Transmit covariance `R_x = sum_k w_k w_k^H + R_0`.
    pub fn rx(&self) -> HermitianMatrix {
        let mut acc = self.r0.as_matrix().clone();
        for w in &self.w {
            acc = acc.add(&outer(w, w));
        }
        HermitianMatrix::symmetrized(acc)
    }

    /// `sum_k ||w_k||^2 + tr(R_0)`.
    pub fn total_power(&self) -> f64 {
        let beams: f64 = self.w.iter().map(|w| cdot(w, w).re).sum();
        beams + self.r0.trace()
    }

    /// Scales every beamformer by `sqrt(c)` and `R_0` by `c`, scaling the
    /// covariance (and total power) by exactly `c`.
    pub fn scale_power(&self, c: f64) -> TransmitDesign {
        let amp = Complex64::new(c.sqrt(), 0.0);
        TransmitDesign {
            w: self
                .w
                .iter()
                .map(|w| w.iter().map(|z| z * amp).collect())
                .collect(),
            r0: self.r0.scale(c),
        }
    }
}

/// Unit-modulus IRS reflection coefficients, stored as phases so that
/// `|v_n| = 1` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectCoeffs {
    phases: Vec<f64>,
}

impl ReflectCoeffs {
    pub fn from_phases(phases: Vec<f64>) -> Self {
        Self { phases }
    }

    /// Phases of the given complex coefficients (magnitudes discarded).
    pub fn from_complex(v: &[Complex64]) -> Self {
        Self {
            phases: v.iter().map(|z| z.arg()).collect(),
        }
    }

    pub fn all_ones(n: usize) -> Self {
        Self {
            phases: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Reflection vector `v = [e^{j phi_1}, ..., e^{j phi_N}]`.
    pub fn v(&self) -> Vec<Complex64> {
        self.phases
            .iter()
            .map(|&p| Complex64::from_polar(1.0, p))
            .collect()
    }
}

/// Optimization-level parameters (linear units).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Maximum transmit power (watts).
    pub p0: f64,
    /// Per-CU SINR thresholds (linear).
    pub gamma: Vec<f64>,
    /// Symbols per transmission block.
    pub t_symbols: usize,
}

impl SystemParams {
    /// Thresholds are accepted in dB at the interface and converted once.
    pub fn from_db(p0_dbm: f64, gamma_db: &[f64], t_symbols: usize) -> Result<Self, SystemError> {
        let p = Self {
            p0: crate::channel::dbm_to_watts(p0_dbm),
            gamma: gamma_db
                .iter()
                .map(|&g| crate::channel::db_to_linear(g))
                .collect(),
            t_symbols,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SystemError> {
        if !(self.p0 > 0.0) {
            return Err(SystemError::BadParameter("P0 must be > 0"));
        }
        if self.gamma.iter().any(|&g| !(g > 0.0)) {
            return Err(SystemError::BadParameter("SINR thresholds must be > 0"));
        }
        if self.t_symbols == 0 {
            return Err(SystemError::BadParameter("T must be >= 1"));
        }
        Ok(())
    }
}

/// Combined BS -> CU channels `h_k = h_d,k + G^H Phi^H h_r,k`.
pub fn combined_channel(ch: &ChannelSet, coeffs: &ReflectCoeffs) -> Vec<Vec<Complex64>> {
    let v = coeffs.v();
    let dims = ch.dims();
    assert_eq!(v.len(), dims.n, "reflect coefficient count != N");
    ch.h_d
        .iter()
        .zip(&ch.h_r)
        .map(|(hd, hr)| {
            // t = Phi^H h_r has entries conj(v_n) h_r[n].
            let t: Vec<Complex64> = v.iter().zip(hr).map(|(vn, h)| vn.conj() * h).collect();
            let gt = ch.g.adjoint().matvec(&t);
            hd.iter().zip(gt).map(|(a, b)| a + b).collect()
        })
        .collect()
}

/// Per-CU SINRs for the given receiver type.
pub fn sinr(
    design: &TransmitDesign,
    h: &[Vec<Complex64>],
    sigma_k_sq: &[f64],
    receiver: ReceiverType,
) -> Vec<f64> {
    let k_total = h.len();
    (0..k_total)
        .map(|k| {
            let hk = &h[k];
            let desired = cdot(hk, &design.w[k]).norm_sqr();
            let mut denom = sigma_k_sq[k];
            for (i, wi) in design.w.iter().enumerate() {
                if i != k {
                    denom += cdot(hk, wi).norm_sqr();
                }
            }
            if receiver == ReceiverType::I {
                denom += design.r0.quad_form(hk);
            }
            desired / denom
        })
        .collect()
}

/// Estimation CRB `sigma_R^2/T * tr((G R_x G^H)^-1) * tr((G G^H)^-1)`.
pub fn crb(
    g: &CMatrix,
    rx: &HermitianMatrix,
    sigma_r_sq: f64,
    t_symbols: usize,
) -> Result<f64, SystemError> {
    let g_rx_gh = HermitianMatrix::symmetrized(g.mul(rx.as_matrix()).mul(&g.adjoint()));
    let signal = trace_inv(&g_rx_gh).map_err(|source| SystemError::CrbNearSingular {
        factor: "G R_x G^H",
        source,
    })?;
    let gram = HermitianMatrix::symmetrized(g.mul(&g.adjoint()));
    let geometry = trace_inv(&gram).map_err(|source| SystemError::CrbNearSingular {
        factor: "G G^H",
        source,
    })?;
    Ok(sigma_r_sq / t_symbols as f64 * signal * geometry)
}

/// Lifted quadratic forms for the reflective-beamforming SDR.
///
/// With the stacked variable `vt = [v; 1]`, the matrices satisfy, for every
/// unit-modulus `v`:
///
/// ```text
///   vt^H q[k][i] vt = |h_k(v)^H w_i|^2
///   vt^H q0[k]  vt = h_k(v)^H R_0 h_k(v)
/// ```
///
/// Both are PSD: `q[k][i]` is a rank-one outer product and `q0[k]` a
/// congruence of `R_0`. (The raw stacked vector `a = [diag(h_r^H) G w;
/// h_d^H w]` satisfies `h^H w = vt^T a`, so the quadratic form in `vt`
/// requires the conjugated outer product.)
pub struct ReflectQuadratics {
    /// `q[k][i]`, each (N+1) x (N+1).
    pub q: Vec<Vec<HermitianMatrix>>,
    /// `q0[k]`, each (N+1) x (N+1).
    pub q0: Vec<HermitianMatrix>,
}

pub fn reflect_quadratics(ch: &ChannelSet, design: &TransmitDesign) -> ReflectQuadratics {
    let dims = ch.dims();
    let (n, k_total) = (dims.n, dims.k);
    let mut q = Vec::with_capacity(k_total);
    let mut q0 = Vec::with_capacity(k_total);
    for k in 0..k_total {
        // B_k = [diag(h_r,k^H) G; h_d,k^H], (N+1) x M.
        let b = CMatrix::from_fn(n + 1, dims.m, |r, c| {
            if r < n {
                ch.h_r[k][r].conj() * ch.g[(r, c)]
            } else {
                ch.h_d[k][c].conj()
            }
        });
        let mut row = Vec::with_capacity(k_total);
        for wi in &design.w {
            let a = b.matvec(wi);
            let a_conj: Vec<Complex64> = a.iter().map(|z| z.conj()).collect();
            row.push(HermitianMatrix::symmetrized(outer(&a_conj, &a_conj)));
        }
        q.push(row);
        let m0 = b.mul(design.r0.as_matrix()).mul(&b.adjoint());
        q0.push(HermitianMatrix::symmetrized(m0.conj()));
    }
    ReflectQuadratics { q, q0 }
}

/// Exact per-CU SINR slacks `|h_k^H w_k|^2 / Gamma_k - interference -
/// sigma_k^2` used to rank reflective-beamforming candidates.
pub fn sinr_slacks(
    design: &TransmitDesign,
    h: &[Vec<Complex64>],
    gamma: &[f64],
    sigma_k_sq: &[f64],
    receiver: ReceiverType,
) -> Vec<f64> {
    (0..h.len())
        .map(|k| {
            let hk = &h[k];
            let desired = cdot(hk, &design.w[k]).norm_sqr();
            let mut interference = 0.0;
            for (i, wi) in design.w.iter().enumerate() {
                if i != k {
                    interference += cdot(hk, wi).norm_sqr();
                }
            }
            if receiver == ReceiverType::I {
                interference += design.r0.quad_form(hk);
            }
            desired / gamma[k] - interference - sigma_k_sq[k]
        })
        .collect()
}

/// Exact rescaling of channels and power so the interior-point solver sees
/// O(1) data: `P0 = 1`, `max_k sigma_k^2 = 1`, `||G_obj||_F = sqrt(N)`.
///
/// SINRs are invariant under the channel/noise rescaling, and the CRB
/// objective is a known multiple of the scaled one, so solutions map back
/// exactly.
#[derive(Debug, Clone)]
pub struct ScaledSystem {
    /// Channels with `h_d`, `h_r`, and noise rescaled (`G` untouched so the
    /// combined-channel formula still applies).
    pub ch: ChannelSet,
    /// `G / s_g`, used only inside the CRB objective.
    pub g_obj: CMatrix,
    /// `P0 = 1` and the original thresholds.
    pub params: SystemParams,
    p0: f64,
    s_g: f64,
}

impl ScaledSystem {
    pub fn new(ch: &ChannelSet, params: &SystemParams) -> Self {
        let max_sigma = ch
            .sigma_k_sq
            .iter()
            .fold(f64::MIN_POSITIVE, |a, &b| a.max(b));
        // s_c^2 = P0 / max sigma^2: channel amplitude scale.
        let s_c = (params.p0 / max_sigma).sqrt();
        let n = ch.g.rows();
        let s_g = ch.g.fro_norm() / (n as f64).sqrt();
        let scale_vec = |v: &Vec<Complex64>| -> Vec<Complex64> {
            v.iter().map(|z| z * s_c).collect()
        };
        let scaled = ChannelSet {
            g: ch.g.clone(),
            h_d: ch.h_d.iter().map(scale_vec).collect(),
            h_r: ch.h_r.iter().map(scale_vec).collect(),
            sigma_k_sq: ch.sigma_k_sq.iter().map(|&s| s / max_sigma).collect(),
            sigma_r_sq: ch.sigma_r_sq,
        };
        ScaledSystem {
            ch: scaled,
            g_obj: ch.g.scale(Complex64::new(1.0 / s_g, 0.0)),
            params: SystemParams {
                p0: 1.0,
                gamma: params.gamma.clone(),
                t_symbols: params.t_symbols,
            },
            p0: params.p0,
            s_g,
        }
    }

    /// Maps a unit-power design back to physical power.
    pub fn design_to_physical(&self, design: &TransmitDesign) -> TransmitDesign {
        design.scale_power(self.p0)
    }

    /// Maps the solved `tr((G_obj Rx' G_obj^H)^-1)` back to the physical
    /// `tr((G Rx G^H)^-1)`.
    pub fn objective_to_physical(&self, scaled_objective: f64) -> f64 {
        scaled_objective / (self.p0 * self.s_g * self.s_g)
    }
}

#[cfg(test)]
mod tests;
