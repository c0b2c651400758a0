//! IRS-enabled multiuser ISAC simulation library.
//!
//! Implements joint transmit and reflective beamforming for an intelligent
//! reflecting surface (IRS) assisted integrated sensing and communication
//! (ISAC) system: a base station serves single-antenna users while estimating
//! an extended target's response matrix through the BS-IRS-target-IRS-BS
//! echo path. Beamformers are chosen to minimize the Cramér-Rao bound (CRB)
//! of that estimate under per-user SINR and total power constraints.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`] — dense complex matrix kernels (Hermitian eigendecomposition,
//!   Cholesky solves, trace-inverse).
//! - [`sdp`] — a self-contained primal-dual interior-point solver for small
//!   dense semidefinite programs, plus the Hermitian-to-real embedding.
//! - [`rng`] — counter-based deterministic random streams.
//! - [`channel`] — seeded Rician/Rayleigh channel realizations with
//!   distance-dependent path loss.
//! - [`system`] — system-level metrics: combined channels, SINR, transmit
//!   power, CRB, and the lifted quadratic forms for reflective beamforming.
//! - [`beamform`] — the optimization algorithms: transmit SDR with rank-one
//!   reconstruction, reflective SDR with Gaussian randomization, alternating
//!   optimization, and two benchmark schemes.
//! - [`sensing`] — echo simulation and a least-squares estimator of the
//!   target response matrix, used as an empirical check on the CRB.
//! - [`sweep`] — experiment configs, Monte-Carlo sweeps, CSV/JSON outputs.

pub mod beamform;
pub mod channel;
pub mod linalg;
pub mod rng;
pub mod sdp;
pub mod sensing;
pub mod sweep;
pub mod system;

pub use num_complex::Complex64;
