//! `dicke-effdim`: spectra, shell samples, effective dimensions and the
//! random-state comparisons, written as CSV with JSON metadata.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dicke_effdim::Error;

#[derive(Debug, Parser)]
#[command(name = "dicke-effdim", version, about = "Effective dimensions of Dicke-model energy shells")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Pseudospin size (default 100 for classical commands, 20 for quantum ones).
    #[arg(long, global = true)]
    pub j: Option<f64>,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub omega0: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo draws per shell; accepts forms like `1e6`.
    #[arg(long, global = true, value_parser = parse_count)]
    pub draws: Option<u64>,
    /// Directory for cached eigendecompositions.
    #[arg(long, global = true, env = "DICKE_CACHE_DIR", default_value = ".dicke-cache")]
    pub cache_dir: PathBuf,
    /// Flat `key = value` file supplying defaults for any long option.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Diagonalize and cache the spectrum.
    Spectrum(commands::SpectrumArgs),
    /// Sample an energy shell; report ν and the σ_x means.
    Shell(commands::ShellArgs),
    /// Effective dimension at one energy.
    Effdim(commands::EffdimArgs),
    /// Shell profile of one eigenstate.
    Profile(commands::ProfileArgs),
    /// Eigenstate dimensionality against the effective dimension.
    Eigdim(commands::EigdimArgs),
    /// σ_x over a shell and its histogram.
    SigmaMap(commands::SigmaMapArgs),
    /// Dimensionality of profile ensembles against profile width.
    Dimensionality(commands::DimensionalityArgs),
    /// Participation ratio and dimensionality of window states.
    PrSweep(commands::PrSweepArgs),
}

/// Parses counts written as integers or in scientific notation.
fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if x >= 1.0 && x.fract() == 0.0 && x <= 9.007_199_254_740_992e15 {
        Ok(x as u64)
    } else {
        Err(format!("expected a positive whole count, got {s:?}"))
    }
}

/// Failures split into user errors (exit 1) and numerical ones (exit 2).
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::EigenSolver
            | Error::ParityMixing { .. }
            | Error::Truncation { .. }
            | Error::ZeroAverage
            | Error::ZeroWidth
            | Error::ZeroWeights => Failure::Numerical(e.to_string()),
            Error::Io(_) | Error::Json(_) | Error::CacheCorrupt { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let argv = match config::expand_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.common.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
