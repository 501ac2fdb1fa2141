mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::{RunConfig, TOLERANCE_ENV};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] dtn_core::Error),
}

impl CliError {
    fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "cli::config",
            CliError::Io(_) => "cli::io",
            CliError::Core(e) => e.code(),
        }
    }
}

/// Verification suites for the semiclassical Maxwell DtN parametrix.
///
/// Each command writes `<output-dir>/<command>.csv` (resolved config in a
/// `#` header, summary block at the end) and prints one summary line.
/// Exit status: 0 all checks pass, 1 a check failed, 2 configuration or
/// precondition error.
#[derive(Debug, Parser)]
#[command(name = "dtn", version)]
struct Cli {
    /// TOML run configuration; omitted fields take their defaults.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Directory for the CSV reports.
    #[arg(long, short, global = true, default_value = ".")]
    output_dir: PathBuf,
    /// Worker threads (0 = all cores); overrides the config file.
    #[arg(long, short = 'j', global = true)]
    threads: Option<usize>,
    /// Seed for random test points; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Default residual tolerance when the config file sets none.
    #[arg(long = "default-tolerance", env = TOLERANCE_ENV, global = true, hide_env_values = true)]
    default_tolerance: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Pointwise algebraic identities on random points of each chart.
    Identities,
    /// Eikonal residual against depth for a range of truncation orders.
    Eikonal,
    /// Maxwell residual of the amplitude table, boundary condition and normalization.
    Residual,
    /// Symbol impedances against exact ball impedances over an h-sweep.
    DtnCompare,
    /// Winding-number scan of the transmission region.
    TeScan,
    /// Composition and boundedness estimates on the torus grid.
    Quantizer,
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.resolve_tolerance(cli.default_tolerance.as_deref())?;
    cfg.validate()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;

    let outcome = match cli.command {
        Command::Identities => commands::identities(&cfg),
        Command::Eikonal => commands::eikonal(&cfg),
        Command::Residual => commands::residual(&cfg),
        Command::DtnCompare => commands::dtn_compare(&cfg),
        Command::TeScan => commands::te_scan(&cfg),
        Command::Quantizer => commands::quantizer(&cfg),
    }?;
    let path = outcome.report.write(&cfg, &cli.output_dir)?;
    println!("{}: {} {} [{}]", cli.command.name(), if outcome.pass { "PASS" } else { "FAIL" }, outcome.summary, path.display());
    Ok(outcome.pass)
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Identities => "identities",
            Command::Eikonal => "eikonal",
            Command::Residual => "residual",
            Command::DtnCompare => "dtn-compare",
            Command::TeScan => "te-scan",
            Command::Quantizer => "quantizer",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(2)
        }
    }
}
