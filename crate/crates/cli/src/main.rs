//! Command-line sweep runner.
//!
//! Verbs: `run` executes a seeded Monte-Carlo sweep and writes CSV results,
//! `summarize` aggregates a results CSV into a JSON summary, and `validate`
//! checks a config without running anything. Logging verbosity comes from
//! the `ISAC_LOG` environment variable (error, info, debug).
//!
//! Exit codes: 0 success, 1 validation/parse error, 2 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use isac_core::sweep::{
    load_config, read_csv, run_sweep, summarize, write_csv, write_summary_json, SweepError,
};

#[derive(Parser)]
#[command(name = "isac", about = "IRS-enabled ISAC joint beamforming simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep over SINR thresholds, schemes, and receiver types.
    Run {
        /// JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path (written atomically).
        #[arg(long)]
        out: PathBuf,
        /// Override the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Worker count (output bytes do not depend on it).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Aggregate a results CSV into per-cell statistics.
    Summarize {
        /// Input CSV produced by `run`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a config and print its canonical form.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ISAC_LOG", "error")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                SweepError::Io { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), SweepError> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            trials,
            jobs,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(seed) = seed {
                cfg.base_seed = seed;
            }
            if let Some(trials) = trials {
                cfg.n_trials = trials;
            }
            cfg.validate()?;
            log::info!(
                "running {} trials x {} thresholds x {} schemes x {} receiver types on {} workers",
                cfg.n_trials,
                cfg.gamma_grid_db.len(),
                cfg.schemes.len(),
                cfg.receiver_types.len(),
                jobs
            );
            let records = run_sweep(&cfg, jobs)?;
            write_csv(&records, &out)?;
            log::info!("wrote {} records to {}", records.len(), out.display());
            Ok(())
        }
        Command::Summarize { input, out } => {
            let records = read_csv(&input)?;
            let summary = summarize(&records)?;
            write_summary_json(&summary, &out)?;
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            println!(
                "{}",
                serde_json_pretty(&cfg.to_canonical_json())
            );
            Ok(())
        }
    }
}

fn serde_json_pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("canonical config serializes")
}
