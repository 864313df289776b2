//! Command-line front end: loads an [`ExperimentConfig`], applies flag
//! overrides, runs one experiment and writes a CSV plus a JSON run
//! manifest next to it.
//!
//! Exit codes: 0 success, 2 invalid configuration or arguments, 3 I/O
//! failure.

mod experiments;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use arisim_core::config::{Experiment, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

pub use experiments::run_experiment;
pub use output::{manifest_path, RunManifest, Table, MANIFEST_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "arisim", version, about = "Aerial-RIS CoMP-NOMA link-level simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Configuration file (TOML, or JSON config / run manifest).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials (trials to export for `export-qps`).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output CSV path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Network sum rate against the number of RIS elements.
    SumrateVsElements,
    /// Per-user average rates across the transmit-power sweep.
    RateVsPower,
    /// Outage probabilities with/without RIS and with/without CoMP.
    OutageVsPower,
    /// Spectral and energy efficiency across the transmit-power sweep.
    SeEe,
    /// Grid search over the NOMA power-allocation factor.
    PaSweep,
    /// Exhaustive search over RIS element splits.
    SplitSearch,
    /// Quantized-phase bit dataset for the feedback compressors.
    ExportQps,
    /// Print the effective configuration as TOML.
    PrintConfig,
}

impl Command {
    fn experiment(&self) -> Option<Experiment> {
        Some(match self {
            Command::SumrateVsElements => Experiment::SumrateVsElements,
            Command::RateVsPower => Experiment::RateVsPower,
            Command::OutageVsPower => Experiment::OutageVsPower,
            Command::SeEe => Experiment::SeEe,
            Command::PaSweep => Experiment::PaSweep,
            Command::SplitSearch => Experiment::SplitSearch,
            Command::ExportQps => Experiment::ExportQps,
            Command::PrintConfig => return None,
        })
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<arisim_core::Error> for CliError {
    fn from(e: arisim_core::Error) -> Self {
        match e {
            arisim_core::Error::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn effective_config(common: &CommonArgs, experiment: Option<Experiment>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if experiment.is_some() {
        cfg.experiment = experiment;
    }
    if let Some(seed) = common.seed {
        cfg.plan.seed = seed;
    }
    if let Some(trials) = common.trials {
        if experiment == Some(Experiment::ExportQps) {
            // export counts trials directly; zero is a valid header-only export
            cfg.plan.trials = trials.max(1);
        } else {
            cfg.plan.trials = trials;
        }
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let experiment = cli.command.experiment();
    let cfg = effective_config(&cli.common, experiment)?;
    let Some(experiment) = experiment else {
        print!("{}", cfg.to_toml_string());
        return Ok(());
    };
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", experiment.name())));
    let export_trials = match experiment {
        Experiment::ExportQps => cli.common.trials,
        _ => None,
    };
    let work = || experiments::run_and_write(&cfg, experiment, &out, export_trials);
    match cli.common.workers {
        Some(n) => {
            if n == 0 {
                return Err(CliError::Config("--workers must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?
                .install(work)
        }
        None => work(),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("arisim: {e}");
            e.exit_code()
        }
    }
}
