//! Seeded random channel realizations.
//!
//! Propagation follows a distance-dependent path loss `L(d) = K0 (d/d0)^-a`
//! with `d0 = 1 m`, Rician fading on the BS-IRS and BS-CU links, Rayleigh
//! fading on the IRS-CU links, and log-normal shadowing on the BS-CU links
//! only. Line-of-sight components use uniform linear arrays with
//! half-wavelength spacing: the BS array lies along the y axis and the IRS
//! array along the x axis, with steering phases taken from the geometric
//! angles between node positions (the array geometry is a documented
//! assumption, not part of the propagation model).
//!
//! Every realization is a pure function of `(seed, inputs)`; sub-streams are
//! split per link so realizations are independent of generation order.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::linalg::{herm_eig, CMatrix, HermitianMatrix, PD_REL_TOL};
use crate::rng::StreamRng;

const LINK_G: u64 = 1;
const LINK_HD: u64 = 0x100;
const LINK_HR: u64 = 0x200;
const LINK_SHADOW: u64 = 0x300;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("path loss distance must be positive (got {0})")]
    NonPositiveDistance(f64),
    #[error("geometry has coincident nodes (zero pairwise distance)")]
    CoincidentNodes,
    #[error("dims require N <= M for a full-rank BS-IRS channel (N = {n}, M = {m})")]
    RankRequiresWideBs { n: usize, m: usize },
    #[error("geometry provides {have} CU positions but K = {need}")]
    MissingCuPositions { have: usize, need: usize },
    #[error("noise power must be positive")]
    NonPositiveNoise,
    #[error("BS-IRS channel stayed rank-deficient after {0} regeneration attempts")]
    RankDeficient(usize),
    #[error("invalid propagation parameter: {0}")]
    BadParameter(&'static str),
}

/// 2-D node coordinates in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub bs_pos: [f64; 2],
    pub irs_pos: [f64; 2],
    pub cu_pos: Vec<[f64; 2]>,
}

impl Geometry {
    /// BS at the origin, IRS at (4, 2), CUs at (50, 0), (45, -2), (55, -2).
    pub fn default_layout() -> Self {
        Self {
            bs_pos: [0.0, 0.0],
            irs_pos: [4.0, 2.0],
            cu_pos: vec![[50.0, 0.0], [45.0, -2.0], [55.0, -2.0]],
        }
    }

    pub fn validate(&self, k: usize) -> Result<(), ChannelError> {
        if self.cu_pos.len() < k {
            return Err(ChannelError::MissingCuPositions {
                have: self.cu_pos.len(),
                need: k,
            });
        }
        let mut nodes = vec![self.bs_pos, self.irs_pos];
        nodes.extend(self.cu_pos.iter().take(k).copied());
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if dist(nodes[i], nodes[j]) <= 0.0 {
                    return Err(ChannelError::CoincidentNodes);
                }
            }
        }
        Ok(())
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Path loss and fading parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationParams {
    /// Reference path loss (dB) at d0 = 1 m.
    pub k0_db: f64,
    pub alpha_bs_irs: f64,
    pub alpha_irs_cu: f64,
    pub alpha_bs_cu: f64,
    /// Rician factors; `f64::INFINITY` selects the pure-LoS limit.
    pub rician_bs_irs: f64,
    pub rician_bs_cu: f64,
    /// Log-normal shadow standard deviation (dB), BS-CU links only.
    pub shadow_std_db: f64,
}

impl Default for PropagationParams {
    fn default() -> Self {
        Self {
            k0_db: -30.0,
            alpha_bs_irs: 2.2,
            alpha_irs_cu: 2.2,
            alpha_bs_cu: 3.5,
            rician_bs_irs: 0.5,
            rician_bs_cu: 0.5,
            shadow_std_db: 10.0,
        }
    }
}

impl PropagationParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.alpha_bs_irs <= 0.0 || self.alpha_irs_cu <= 0.0 || self.alpha_bs_cu <= 0.0 {
            return Err(ChannelError::BadParameter("path loss exponents must be > 0"));
        }
        if self.rician_bs_irs < 0.0 || self.rician_bs_cu < 0.0 {
            return Err(ChannelError::BadParameter("Rician factors must be >= 0"));
        }
        if self.shadow_std_db < 0.0 {
            return Err(ChannelError::BadParameter("shadow std must be >= 0"));
        }
        Ok(())
    }
}

/// Antenna/element/user counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    /// BS antennas.
    pub m: usize,
    /// IRS elements.
    pub n: usize,
    /// Communication users.
    pub k: usize,
}

/// Noise powers in dBm (converted to watts once at generation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoisePowers {
    pub sigma_k_dbm: f64,
    pub sigma_r_dbm: f64,
}

impl Default for NoisePowers {
    fn default() -> Self {
        Self {
            sigma_k_dbm: -80.0,
            sigma_r_dbm: -110.0,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power gain `K0 * d^-alpha` at distance `d` meters (d0 = 1 m).
pub fn path_loss(d: f64, alpha: f64, k0_db: f64) -> Result<f64, ChannelError> {
    if d <= 0.0 {
        return Err(ChannelError::NonPositiveDistance(d));
    }
    Ok(db_to_linear(k0_db) * d.powf(-alpha))
}

/// All propagation matrices for one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// BS -> IRS channel, N x M.
    pub g: CMatrix,
    /// BS -> CU k channels, each an M-vector.
    pub h_d: Vec<Vec<Complex64>>,
    /// IRS -> CU k channels, each an N-vector.
    pub h_r: Vec<Vec<Complex64>>,
    /// Per-CU noise powers (watts).
    pub sigma_k_sq: Vec<f64>,
    /// BS echo-receiver noise power (watts).
    pub sigma_r_sq: f64,
}

impl ChannelSet {
    pub fn dims(&self) -> Dims {
        Dims {
            m: self.g.cols(),
            n: self.g.rows(),
            k: self.h_d.len(),
        }
    }

    /// Content digest for paired-trial assertions.
    pub fn digest(&self) -> u64 {
        let mut h = 0xcbf29ce484222325u64;
        let mut eat = |x: f64| {
            h ^= x.to_bits();
            h = h.wrapping_mul(0x100000001b3);
        };
        for z in self.g.data() {
            eat(z.re);
            eat(z.im);
        }
        for v in self.h_d.iter().chain(self.h_r.iter()) {
            for z in v {
                eat(z.re);
                eat(z.im);
            }
        }
        for &s in &self.sigma_k_sq {
            eat(s);
        }
        eat(self.sigma_r_sq);
        h
    }

    /// JSON fixture dump; complex entries as `[re, im]` pairs.
    pub fn to_json(&self) -> serde_json::Value {
        let cvec = |v: &[Complex64]| -> Vec<[f64; 2]> { v.iter().map(|z| [z.re, z.im]).collect() };
        let rows: Vec<Vec<[f64; 2]>> = (0..self.g.rows())
            .map(|i| {
                (0..self.g.cols())
                    .map(|j| [self.g[(i, j)].re, self.g[(i, j)].im])
                    .collect()
            })
            .collect();
        json!({
            "g": rows,
            "h_d": self.h_d.iter().map(|v| cvec(v)).collect::<Vec<_>>(),
            "h_r": self.h_r.iter().map(|v| cvec(v)).collect::<Vec<_>>(),
            "sigma_k_sq": self.sigma_k_sq,
            "sigma_r_sq": self.sigma_r_sq,
        })
    }
}

fn rician_mix(k: f64) -> (f64, f64) {
    // (LoS, diffuse) amplitude weights; written so k = inf is exact.
    let los = (1.0 / (1.0 + 1.0 / k)).sqrt();
    let nlos = (1.0 / (1.0 + k)).sqrt();
    (los, nlos)
}

/// ULA steering phases for a node whose array lies along `axis`, toward
/// `target`; half-wavelength spacing gives a per-element phase of
/// `pi * i * sin(theta)` with `sin(theta)` the projection on the array axis.
fn steering(len: usize, from: [f64; 2], axis: [f64; 2], target: [f64; 2]) -> Vec<Complex64> {
    let d = dist(from, target);
    let dir = [(target[0] - from[0]) / d, (target[1] - from[1]) / d];
    let proj = dir[0] * axis[0] + dir[1] * axis[1];
    (0..len)
        .map(|i| Complex64::from_polar(1.0, std::f64::consts::PI * i as f64 * proj))
        .collect()
}

fn draw_cn_vector(rng: &mut StreamRng, len: usize) -> Vec<Complex64> {
    (0..len).map(|_| rng.complex_normal()).collect()
}

/// Generates one seeded channel realization (deterministic given `seed`).
pub fn gen_channels(
    geom: &Geometry,
    params: &PropagationParams,
    dims: Dims,
    noise: &NoisePowers,
    seed: u64,
) -> Result<ChannelSet, ChannelError> {
    params.validate()?;
    geom.validate(dims.k)?;
    if dims.n > dims.m {
        return Err(ChannelError::RankRequiresWideBs {
            n: dims.n,
            m: dims.m,
        });
    }
    let sigma_r_sq = dbm_to_watts(noise.sigma_r_dbm);
    let sigma_k_sq = vec![dbm_to_watts(noise.sigma_k_dbm); dims.k];
    if sigma_r_sq <= 0.0 || sigma_k_sq.iter().any(|&s| s <= 0.0) {
        return Err(ChannelError::NonPositiveNoise);
    }

    let root = StreamRng::new(seed);
    let bs_axis = [0.0, 1.0];
    let irs_axis = [1.0, 0.0];

    // BS-IRS link: Rician, LoS = a_irs a_bs^H (unit-magnitude entries).
    let l_g = path_loss(dist(geom.bs_pos, geom.irs_pos), params.alpha_bs_irs, params.k0_db)?;
    let (los_w, nlos_w) = rician_mix(params.rician_bs_irs);
    let a_irs = steering(dims.n, geom.irs_pos, irs_axis, geom.bs_pos);
    let a_bs = steering(dims.m, geom.bs_pos, bs_axis, geom.irs_pos);
    let mut g = CMatrix::zeros(dims.n, dims.m);
    let amp = l_g.sqrt();
    let mut attempt = 0u64;
    loop {
        let mut rng_g = root.derive(&[LINK_G, attempt]);
        for i in 0..dims.n {
            for j in 0..dims.m {
                let los = a_irs[i] * a_bs[j].conj();
                let nlos = rng_g.complex_normal();
                g[(i, j)] = (los * los_w + nlos * nlos_w) * amp;
            }
        }
        // Full rank N required downstream (CRB Gram factors).
        let gram = HermitianMatrix::symmetrized(g.mul(&g.adjoint()));
        let ok = match herm_eig(&gram) {
            Ok(eig) => eig.values[0] > PD_REL_TOL * eig.values[dims.n - 1].max(0.0),
            Err(_) => false,
        };
        if ok {
            break;
        }
        attempt += 1;
        if attempt >= 10 {
            return Err(ChannelError::RankDeficient(10));
        }
    }

    let mut h_d = Vec::with_capacity(dims.k);
    let mut h_r = Vec::with_capacity(dims.k);
    for k in 0..dims.k {
        let cu = geom.cu_pos[k];

        // BS-CU: Rician plus log-normal shadowing.
        let l_d = path_loss(dist(geom.bs_pos, cu), params.alpha_bs_cu, params.k0_db)?;
        let (los_w, nlos_w) = rician_mix(params.rician_bs_cu);
        let a = steering(dims.m, geom.bs_pos, bs_axis, cu);
        let mut rng_d = root.derive(&[LINK_HD, k as u64]);
        let mut rng_s = root.derive(&[LINK_SHADOW, k as u64]);
        let shadow_amp = db_to_linear(params.shadow_std_db * rng_s.standard_normal()).sqrt();
        let diffuse = draw_cn_vector(&mut rng_d, dims.m);
        let amp_d = l_d.sqrt() * shadow_amp;
        h_d.push(
            (0..dims.m)
                .map(|i| (a[i] * los_w + diffuse[i] * nlos_w) * amp_d)
                .collect(),
        );

        // IRS-CU: Rayleigh.
        let l_r = path_loss(dist(geom.irs_pos, cu), params.alpha_irs_cu, params.k0_db)?;
        let mut rng_r = root.derive(&[LINK_HR, k as u64]);
        let amp_r = l_r.sqrt();
        h_r.push(
            draw_cn_vector(&mut rng_r, dims.n)
                .into_iter()
                .map(|z| z * amp_r)
                .collect(),
        );
    }

    Ok(ChannelSet {
        g,
        h_d,
        h_r,
        sigma_k_sq,
        sigma_r_sq,
    })
}
