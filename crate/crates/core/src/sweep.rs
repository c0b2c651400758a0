//! Experiment configuration, seeded Monte-Carlo sweeps, and result files.
//!
//! A sweep runs every `(trial, gamma, scheme, receiver type)` cell. Channels
//! depend only on `(base_seed, trial)`, so every cell of a trial sees the
//! identical realization (paired comparisons); per-cell optimizer
//! randomness is seeded from the full cell coordinates. Cells run on a
//! worker pool and the records are sorted canonically before writing, so
//! concurrency never changes output bytes.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beamform::{
    alternating_optimize, benchmark_separate, benchmark_transmit_only, AoConfig, AoStatus,
};
use crate::channel::{gen_channels, ChannelError, ChannelSet, Dims, Geometry, NoisePowers, PropagationParams};
use crate::rng::StreamRng;
use crate::system::{ReceiverType, SystemError, SystemParams};

const TAG_CHANNEL: u64 = 0xC4;
const TAG_RUN: u64 = 0xC5;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config: {0}")]
    Validation(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("malformed CSV record: {0}")]
    Csv(String),
}

/// Comparison scheme identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Proposed,
    TransmitOnly,
    Separate,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::TransmitOnly => "transmit_only",
            Scheme::Separate => "separate",
        }
    }

    fn order(&self) -> u8 {
        match self {
            Scheme::Proposed => 0,
            Scheme::TransmitOnly => 1,
            Scheme::Separate => 2,
        }
    }

    fn parse(s: &str) -> Option<Scheme> {
        match s {
            "proposed" => Some(Scheme::Proposed),
            "transmit_only" => Some(Scheme::TransmitOnly),
            "separate" => Some(Scheme::Separate),
            _ => None,
        }
    }
}

/// Antenna/element/user/block counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigDims {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub t: usize,
}

impl Default for ConfigDims {
    fn default() -> Self {
        Self {
            m: 8,
            n: 8,
            k: 3,
            t: 256,
        }
    }
}

/// Alternating-optimization overrides (receiver type comes from the sweep).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AoOverrides {
    pub max_outer_iters: usize,
    pub rel_tol: f64,
    pub n_randomizations: usize,
    pub max_v_resamples: usize,
}

impl Default for AoOverrides {
    fn default() -> Self {
        let base = AoConfig::for_receiver(ReceiverType::I);
        Self {
            max_outer_iters: base.max_outer_iters,
            rel_tol: base.rel_tol,
            n_randomizations: base.n_randomizations,
            max_v_resamples: base.max_v_resamples,
        }
    }
}

impl AoOverrides {
    pub fn to_config(self, receiver_type: ReceiverType) -> AoConfig {
        AoConfig {
            max_outer_iters: self.max_outer_iters,
            rel_tol: self.rel_tol,
            n_randomizations: self.n_randomizations,
            max_v_resamples: self.max_v_resamples,
            receiver_type,
        }
    }
}

/// Full simulation parameterization; every field has a default matching the
/// reference setup (M = N = 8, T = 256, P0 = 30 dBm, noise -110/-80 dBm,
/// three users at the standard layout).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dims: ConfigDims,
    pub power_dbm: f64,
    pub noise: NoisePowers,
    pub geometry: Geometry,
    pub propagation: PropagationParams,
    pub gamma_grid_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub receiver_types: Vec<ReceiverType>,
    pub n_trials: usize,
    pub base_seed: u64,
    pub ao: AoOverrides,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dims: ConfigDims::default(),
            power_dbm: 30.0,
            noise: NoisePowers::default(),
            geometry: Geometry::default_layout(),
            propagation: PropagationParams::default(),
            gamma_grid_db: vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            schemes: vec![Scheme::Proposed, Scheme::TransmitOnly, Scheme::Separate],
            receiver_types: vec![ReceiverType::I, ReceiverType::II],
            n_trials: 20,
            base_seed: 1,
            ao: AoOverrides::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.dims.n > self.dims.m {
            return Err(SweepError::Validation(format!(
                "dims require N <= M for CRB well-posedness (N = {}, M = {})",
                self.dims.n, self.dims.m
            )));
        }
        if self.dims.k == 0 {
            return Err(SweepError::Validation("K must be >= 1".into()));
        }
        if self.dims.t == 0 {
            return Err(SweepError::Validation("T must be >= 1".into()));
        }
        if self.geometry.cu_pos.len() < self.dims.k {
            return Err(SweepError::Validation(format!(
                "geometry provides {} CU positions but K = {}",
                self.geometry.cu_pos.len(),
                self.dims.k
            )));
        }
        if self.gamma_grid_db.is_empty() {
            return Err(SweepError::Validation("gamma_grid_db must be non-empty".into()));
        }
        if self.schemes.is_empty() || self.receiver_types.is_empty() {
            return Err(SweepError::Validation(
                "schemes and receiver_types must be non-empty".into(),
            ));
        }
        if self.n_trials == 0 {
            return Err(SweepError::Validation("n_trials must be >= 1".into()));
        }
        self.propagation.validate()?;
        self.geometry.validate(self.dims.k)?;
        Ok(())
    }

    pub fn dims(&self) -> Dims {
        Dims {
            m: self.dims.m,
            n: self.dims.n,
            k: self.dims.k,
        }
    }

    /// Channel seed for one trial; identical across every cell of the
    /// trial, which is what makes the sweep a paired comparison.
    pub fn channel_seed(&self, trial: usize) -> u64 {
        StreamRng::new(self.base_seed)
            .derive(&[TAG_CHANNEL, trial as u64])
            .next_u64()
    }

    /// Optimizer seed for one cell. Deliberately independent of the SINR
    /// threshold, so sweeping gamma compares like against like (same
    /// initial phases, same randomization draws).
    pub fn run_seed(&self, trial: usize, scheme: Scheme, rt: ReceiverType) -> u64 {
        let type_id = match rt {
            ReceiverType::I => 1u64,
            ReceiverType::II => 2u64,
        };
        StreamRng::new(self.base_seed)
            .derive(&[TAG_RUN, trial as u64, scheme.order() as u64, type_id])
            .next_u64()
    }

    pub fn channels_for_trial(&self, trial: usize) -> Result<ChannelSet, ChannelError> {
        gen_channels(
            &self.geometry,
            &self.propagation,
            self.dims(),
            &self.noise,
            self.channel_seed(trial),
        )
    }

    pub fn system_params(&self, gamma_db: f64) -> Result<SystemParams, SystemError> {
        SystemParams::from_db(
            self.power_dbm,
            &vec![gamma_db; self.dims.k],
            self.dims.t,
        )
    }

    /// Canonical serialized form (defaults filled in).
    pub fn to_canonical_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialization cannot fail")
    }
}

/// Loads and validates a JSON experiment config.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, SweepError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SweepError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, SweepError> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| SweepError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Per-run outcome classification, including optimizer failures (recorded,
/// never aborting a sweep).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    IterCap,
    Infeasible,
    Failed,
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::IterCap => "iter_cap",
            RunStatus::Infeasible => "infeasible",
            RunStatus::Failed => "failed",
        }
    }

    fn parse(s: &str) -> Option<RunStatus> {
        match s {
            "converged" => Some(RunStatus::Converged),
            "iter_cap" => Some(RunStatus::IterCap),
            "infeasible" => Some(RunStatus::Infeasible),
            "failed" => Some(RunStatus::Failed),
            _ => None,
        }
    }

    pub fn is_solved(&self) -> bool {
        matches!(self, RunStatus::Converged | RunStatus::IterCap)
    }
}

impl From<AoStatus> for RunStatus {
    fn from(s: AoStatus) -> Self {
        match s {
            AoStatus::Converged => RunStatus::Converged,
            AoStatus::IterCap => RunStatus::IterCap,
            AoStatus::Infeasible => RunStatus::Infeasible,
        }
    }
}

/// One CSV row of sweep results.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub seed: u64,
    pub trial: usize,
    pub gamma_db: f64,
    pub receiver_type: ReceiverType,
    pub scheme: Scheme,
    pub status: RunStatus,
    /// Final CRB (linear); `None` when the run produced no design.
    pub crb: Option<f64>,
    pub crb_db: Option<f64>,
    pub outer_iters: usize,
    pub wall_ms: u64,
}

/// Runs the full sweep on `jobs` workers. Records come back sorted by
/// `(trial, gamma, scheme, receiver type)` regardless of scheduling.
pub fn run_sweep(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<SweepRecord>, SweepError> {
    cfg.validate()?;
    struct Cell {
        trial: usize,
        gamma_idx: usize,
        scheme: Scheme,
        rt: ReceiverType,
    }
    let mut cells = Vec::new();
    for trial in 0..cfg.n_trials {
        for gamma_idx in 0..cfg.gamma_grid_db.len() {
            for &scheme in &cfg.schemes {
                for &rt in &cfg.receiver_types {
                    cells.push(Cell {
                        trial,
                        gamma_idx,
                        scheme,
                        rt,
                    });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SweepError::Validation(format!("worker pool: {e}")))?;

    let records: Result<Vec<SweepRecord>, SweepError> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| run_cell(cfg, cell.trial, cell.gamma_idx, cell.scheme, cell.rt))
            .collect()
    });
    let mut records = records?;
    records.sort_by(|a, b| {
        (a.trial, a.gamma_db.to_bits(), a.scheme.order(), a.receiver_type.label())
            .cmp(&(b.trial, b.gamma_db.to_bits(), b.scheme.order(), b.receiver_type.label()))
    });
    Ok(records)
}

fn run_cell(
    cfg: &ExperimentConfig,
    trial: usize,
    gamma_idx: usize,
    scheme: Scheme,
    rt: ReceiverType,
) -> Result<SweepRecord, SweepError> {
    let gamma_db = cfg.gamma_grid_db[gamma_idx];
    let ch = cfg.channels_for_trial(trial)?;
    let params = cfg.system_params(gamma_db)?;
    let seed = cfg.run_seed(trial, scheme, rt);
    let started = Instant::now();
    let outcome = match scheme {
        Scheme::Proposed => {
            let ao = cfg.ao.to_config(rt);
            alternating_optimize(&ch, &params, &ao, seed)
        }
        Scheme::TransmitOnly => benchmark_transmit_only(&ch, &params, rt, seed),
        Scheme::Separate => benchmark_separate(&ch, &params, rt, seed),
    };
    let wall_ms = started.elapsed().as_millis() as u64;
    let record = match outcome {
        Ok(sol) => {
            let crb = sol.final_crb();
            SweepRecord {
                seed,
                trial,
                gamma_db,
                receiver_type: rt,
                scheme,
                status: sol.status.into(),
                crb,
                crb_db: crb.map(|c| 10.0 * c.log10()),
                outer_iters: sol.outer_iters,
                wall_ms,
            }
        }
        Err(e) => {
            log::warn!(
                "run failed (trial {trial}, gamma {gamma_db} dB, {} , type {}): {e}",
                scheme.label(),
                rt.label()
            );
            SweepRecord {
                seed,
                trial,
                gamma_db,
                receiver_type: rt,
                scheme,
                status: RunStatus::Failed,
                crb: None,
                crb_db: None,
                outer_iters: 0,
                wall_ms,
            }
        }
    };
    Ok(record)
}

/// Ten-significant-digit float formatting (diff-stable fixtures).
fn fmt_float(x: f64) -> String {
    format!("{x:.9e}")
}

pub const CSV_HEADER: &str =
    "seed,trial,gamma_db,receiver_type,scheme,status,crb,crb_db,outer_iters,wall_ms";

pub fn records_to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let crb = r.crb.map(fmt_float).unwrap_or_default();
        let crb_db = r.crb_db.map(fmt_float).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.seed,
            r.trial,
            fmt_float(r.gamma_db),
            r.receiver_type.label(),
            r.scheme.label(),
            r.status.label(),
            crb,
            crb_db,
            r.outer_iters,
            r.wall_ms
        ));
    }
    out
}

/// Writes the CSV atomically (temp file + rename in the target directory).
pub fn write_csv(records: &[SweepRecord], path: impl AsRef<Path>) -> Result<(), SweepError> {
    let path = path.as_ref();
    let io_err = |source: std::io::Error| SweepError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name().map(|f| f.to_string_lossy()).unwrap_or_default()
        )),
        None => std::path::PathBuf::from(format!(".{}.tmp", path.display())),
    };
    {
        let mut f = std::fs::File::create(&tmp).map_err(io_err)?;
        f.write_all(records_to_csv(records).as_bytes()).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
    }
    std::fs::rename(&tmp, path).map_err(io_err)?;
    Ok(())
}

/// Reads sweep records back from CSV.
pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<SweepRecord>, SweepError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SweepError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| SweepError::Csv(e.to_string()))?;
        let field = |i: usize| -> Result<&str, SweepError> {
            row.get(i)
                .ok_or_else(|| SweepError::Csv(format!("missing field {i}")))
        };
        let opt_f64 = |s: &str| -> Result<Option<f64>, SweepError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| SweepError::Csv(format!("bad float {s:?}")))
            }
        };
        let rt = match field(3)? {
            "I" => ReceiverType::I,
            "II" => ReceiverType::II,
            other => return Err(SweepError::Csv(format!("bad receiver type {other:?}"))),
        };
        let scheme_str = field(4)?;
        let scheme = Scheme::parse(scheme_str)
            .ok_or_else(|| SweepError::Csv(format!("bad scheme {scheme_str:?}")))?;
        let status_str = field(5)?;
        let status = RunStatus::parse(status_str)
            .ok_or_else(|| SweepError::Csv(format!("bad status {status_str:?}")))?;
        out.push(SweepRecord {
            seed: field(0)?
                .parse()
                .map_err(|_| SweepError::Csv("bad seed".into()))?,
            trial: field(1)?
                .parse()
                .map_err(|_| SweepError::Csv("bad trial".into()))?,
            gamma_db: field(2)?
                .parse()
                .map_err(|_| SweepError::Csv("bad gamma".into()))?,
            receiver_type: rt,
            scheme,
            status,
            crb: opt_f64(field(6)?)?,
            crb_db: opt_f64(field(7)?)?,
            outer_iters: field(8)?
                .parse()
                .map_err(|_| SweepError::Csv("bad outer_iters".into()))?,
            wall_ms: field(9)?
                .parse()
                .map_err(|_| SweepError::Csv("bad wall_ms".into()))?,
        });
    }
    Ok(out)
}

/// Aggregates for one `(gamma, scheme, receiver type)` cell group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    pub gamma_db: f64,
    pub scheme: Scheme,
    pub receiver_type: ReceiverType,
    pub n_runs: usize,
    pub n_solved: usize,
    pub feasibility_rate: f64,
    /// Mean/median/CI of crb_db over solved runs; absent when none solved.
    pub mean_crb_db: Option<f64>,
    pub median_crb_db: Option<f64>,
    /// 95% normal-approximation half width of the mean (0 for one sample).
    pub ci_half_width_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub cells: Vec<SummaryCell>,
}

/// Groups records and aggregates CRBs over solved runs.
pub fn summarize(records: &[SweepRecord]) -> Result<Summary, SweepError> {
    if records.is_empty() {
        return Err(SweepError::Validation("no records to summarize".into()));
    }
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<(u64, u8, &'static str), Vec<&SweepRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.gamma_db.to_bits(), r.scheme.order(), r.receiver_type.label()))
            .or_default()
            .push(r);
    }
    let mut cells = Vec::with_capacity(groups.len());
    for (_, rs) in groups {
        let n_runs = rs.len();
        let solved: Vec<f64> = rs
            .iter()
            .filter(|r| r.status.is_solved())
            .filter_map(|r| r.crb_db)
            .collect();
        let n_solved = solved.len();
        let mean = (n_solved > 0).then(|| solved.iter().sum::<f64>() / n_solved as f64);
        let median = (n_solved > 0).then(|| {
            let mut s = solved.clone();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if n_solved % 2 == 1 {
                s[n_solved / 2]
            } else {
                0.5 * (s[n_solved / 2 - 1] + s[n_solved / 2])
            }
        });
        let ci = mean.map(|m| {
            if n_solved <= 1 {
                0.0
            } else {
                let var = solved.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
                    / (n_solved - 1) as f64;
                1.96 * (var / n_solved as f64).sqrt()
            }
        });
        let first = rs[0];
        cells.push(SummaryCell {
            gamma_db: first.gamma_db,
            scheme: first.scheme,
            receiver_type: first.receiver_type,
            n_runs,
            n_solved,
            feasibility_rate: n_solved as f64 / n_runs as f64,
            mean_crb_db: mean,
            median_crb_db: median,
            ci_half_width_db: ci,
        });
    }
    Ok(Summary { cells })
}

pub fn write_summary_json(summary: &Summary, path: impl AsRef<Path>) -> Result<(), SweepError> {
    let path = path.as_ref();
    let io_err = |source: std::io::Error| SweepError::Io {
        path: path.display().to_string(),
        source,
    };
    let text = serde_json::to_string_pretty(summary)
        .map_err(|e| SweepError::Validation(format!("summary serialization: {e}")))?;
    std::fs::write(path, text).map_err(io_err)
}
