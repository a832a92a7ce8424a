//! `setmem-id`: runs one experiment from a config file.
//!
//! Exit codes: 0 success, 2 configuration or input validation, 3 numerical
//! failure, 4 I/O.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use setmem::estimators::ErrorMetric;
use setmem::experiments::{self, ExperimentConfig, ExperimentKind};
use setmem::Error;

#[derive(Parser)]
#[command(
    name = "setmem-id",
    version,
    about = "Set-membership identification of switched linear systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Set-membership vs least-squares error over seeds and sample sizes
    CompareOls(RunArgs),
    /// Greedy stabilizing bandit over the configured subsystems
    Bandit(RunArgs),
    /// Simulate a switched system and write the trajectory
    Simulate(RunArgs),
    /// Estimate every subsystem from a trajectory CSV
    Estimate(RunArgs),
    /// Spectral radius and norm of each configured matrix
    Spectral(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML (or .json) experiment file
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir`
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run this single seed instead of the configured list
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    metric: Option<Metric>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Frobenius,
    Spectral,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidNoiseSet(_)
        | Error::InvalidSystem(_)
        | Error::Dimension { .. } => 2,
        Error::Explosion { .. }
        | Error::Infeasible { .. }
        | Error::NoPairs
        | Error::Unsupported(_) => 3,
        Error::Chart(_) => 3,
        Error::Io(_) | Error::Csv(_) => 4,
    }
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<(), Error> {
    let mut cfg = ExperimentConfig::load(&args.config).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", args.config.display()),
        )),
        e => e,
    })?;
    if cfg.experiment != kind {
        return Err(Error::Config(format!(
            "config is for '{}' but '{}' was requested",
            cfg.experiment.as_str(),
            kind.as_str()
        )));
    }
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(m) = args.metric {
        cfg.error_metric = match m {
            Metric::Frobenius => ErrorMetric::Frobenius,
            Metric::Spectral => ErrorMetric::Spectral,
        };
    }
    let out_dir = args.out.unwrap_or_else(|| cfg.output_dir());
    let output = experiments::run(&cfg, &out_dir)?;
    for f in &output.files {
        log::info!("wrote {}", f.display());
    }
    print!("{}", output.summary);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::CompareOls(a) => (ExperimentKind::CompareOls, a),
        Command::Bandit(a) => (ExperimentKind::Bandit, a),
        Command::Simulate(a) => (ExperimentKind::Simulate, a),
        Command::Estimate(a) => (ExperimentKind::Estimate, a),
        Command::Spectral(a) => (ExperimentKind::Spectral, a),
    };
    match run(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
