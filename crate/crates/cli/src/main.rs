//! Command-line front end for the simulation library: probability surfaces,
//! level-curve diameter scans, Monte Carlo estimation campaigns, and the
//! numerical verification suites.
//!
//! Configuration precedence is command-line flags over config-file keys over
//! built-in defaults; the fully resolved configuration is hashed into the
//! run manifest written next to every data file. Exit codes: 0 success,
//! 1 usage error, 2 domain or numeric error, 3 verification failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Application failure classes, one per nonzero exit code.
#[derive(Debug)]
pub enum AppError {
    /// Invalid flags, config keys, or argument values (exit 1).
    Usage(String),
    /// Domain or numeric failure while running a command (exit 2).
    Run(String),
    /// This many verification groups failed (exit 3).
    Verification(usize),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Run(_) => 2,
            AppError::Verification(_) => 3,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Usage(msg) | AppError::Run(msg) => write!(f, "{msg}"),
            AppError::Verification(n) => write!(f, "{n} verification group(s) failed"),
        }
    }
}

impl From<mzmetry::Error> for AppError {
    fn from(e: mzmetry::Error) -> Self {
        match e {
            mzmetry::Error::Argument(_) => AppError::Usage(e.to_string()),
            mzmetry::Error::Domain(_) | mzmetry::Error::Numeric(_) => AppError::Run(e.to_string()),
        }
    }
}

/// Phase-space simulator for a squeezed-light Mach-Zehnder interferometer
/// with on-off detection.
#[derive(Debug, Parser)]
#[command(name = "mzmetry", version, disable_help_subcommand = true)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,

    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
struct CommonArgs {
    /// Master seed for all random streams.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Flat JSON config file; explicit flags override its keys.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory the output files are written into.
    #[arg(long, global = true, value_name = "PATH")]
    out_dir: Option<PathBuf>,

    /// Worker thread count, or "auto" for the library default.
    #[arg(long, global = true, value_name = "N|auto")]
    threads: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detection probability over a (beta, phi_minus) grid -> surface.csv.
    Surface(SurfaceArgs),
    /// Level-curve diameters against photon number with log-log slope fits
    /// -> diameters.csv, slopes.json.
    Diameters(DiametersArgs),
    /// Monte Carlo estimation campaign against the analytic variance
    /// prediction -> mc.csv, mc_summary.json.
    Estimate(EstimateArgs),
    /// Run the numerical verification suites and print a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct SurfaceArgs {
    /// Mean photon number of the squeezed input (exclusive with --r).
    #[arg(long = "N", value_name = "N")]
    n_photons: Option<f64>,

    /// Squeeze parameter, related by N = sinh^2 r (exclusive with --N).
    #[arg(long = "r", value_name = "R")]
    squeeze_r: Option<f64>,

    /// Detection efficiency in (0, 1].
    #[arg(long)]
    eta: Option<f64>,

    /// Difference-phase axis range in radians.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    beta_range: Option<Vec<f64>>,

    /// Arm-phase axis range in radians.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    phi_range: Option<Vec<f64>>,

    /// Grid nodes per axis.
    #[arg(long)]
    nodes: Option<usize>,

    /// Detected output channel, 1 or 2.
    #[arg(long)]
    channel: Option<u8>,
}

#[derive(Debug, Args)]
struct DiametersArgs {
    /// Probability level of the scanned curve, in (0, 1).
    #[arg(long = "P0", value_name = "P0")]
    p0: Option<f64>,

    /// Detection efficiency in (0, 1].
    #[arg(long)]
    eta: Option<f64>,

    /// log10 range of the photon-number sweep.
    #[arg(long = "N-log-range", num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    n_log_range: Option<Vec<f64>>,

    /// Sweep points per decade of N.
    #[arg(long)]
    per_decade: Option<usize>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Mean photon number of the squeezed input (exclusive with --r).
    #[arg(long = "N", value_name = "N")]
    n_photons: Option<f64>,

    /// Squeeze parameter, related by N = sinh^2 r (exclusive with --N).
    #[arg(long = "r", value_name = "R")]
    squeeze_r: Option<f64>,

    /// Detection efficiency in (0, 1].
    #[arg(long)]
    eta: Option<f64>,

    /// Estimation target: beta or phi-minus.
    #[arg(long)]
    target: Option<String>,

    /// True offset of the target from the probability maximum, in radians.
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,

    /// On-off trials per experiment.
    #[arg(long)]
    trials: Option<u64>,

    /// Number of independent experiments.
    #[arg(long)]
    experiments: Option<u64>,

    /// Run even when delta is below five predicted standard deviations.
    #[arg(long)]
    unsafe_offset: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Verification group to run (repeatable); defaults to all groups.
    #[arg(long, value_name = "NAME")]
    group: Vec<String>,
}

fn run(cli: Cli) -> Result<(), AppError> {
    let file = config::load_file_config(cli.common.config.as_deref())?;
    let common = config::resolve_common(&cli.common, &file)?;
    config::apply_thread_count(common.threads)?;
    match cli.command {
        Command::Surface(args) => {
            let resolved = config::resolve_surface(&args, &file, common.seed)?;
            commands::cmd_surface(&resolved, &common.out_dir)
        }
        Command::Diameters(args) => {
            let resolved = config::resolve_diameters(&args, &file, common.seed)?;
            commands::cmd_diameters(&resolved, &common.out_dir)
        }
        Command::Estimate(args) => {
            let resolved = config::resolve_estimate(&args, &file, common.seed)?;
            commands::cmd_estimate(&resolved, &common.out_dir)
        }
        Command::Verify(args) => {
            let names = if args.group.is_empty() {
                file.group.clone().unwrap_or_default()
            } else {
                args.group
            };
            commands::cmd_verify(&names)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
