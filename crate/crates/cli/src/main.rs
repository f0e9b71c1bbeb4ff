use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qrc_core::config::ExperimentConfig;
use qrc_core::experiments::{cmd_dynamics, cmd_memory, cmd_nonlinearity, cmd_verify, RunOutcome, Status};

/// Coupled quantum oscillators as a reservoir computer.
#[derive(Parser)]
#[command(name = "qrc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Occupation probabilities against normalized drive amplitude.
    Nonlinearity(Common),
    /// Photon numbers and occupations over time, one file per case.
    Dynamics(Common),
    /// Delayed-input recall capacity for each configured decay rate.
    Memory(Common),
    /// Integrator self-checks; exits nonzero if any fails.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory, overriding `[output] directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the amplitude sweep; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Random seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(args: &Common) -> Result<ExperimentConfig, String> {
    let mut config = ExperimentConfig::load(&args.config).map_err(|e| format!("{}: {e}", args.config.display()))?;
    if let Some(seed) = args.seed {
        config = config.with_seed(seed);
    }
    if let Some(out) = &args.out {
        config = config.with_output_dir(out.clone());
    }
    Ok(config)
}

fn report(outcome: &RunOutcome) {
    for line in &outcome.report {
        println!("{line}");
    }
    for file in &outcome.files {
        println!("wrote {}", file.display());
    }
    if let Some(e) = &outcome.error {
        eprintln!("error: {e}");
    }
    let status = match outcome.status {
        Status::Ok => "OK",
        Status::Failed => "FAILED",
    };
    println!("{} {status}; manifest {}", outcome.command, outcome.manifest.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&Common, fn(&ExperimentConfig, usize) -> RunOutcome) = match &cli.command {
        Command::Nonlinearity(a) => (a, cmd_nonlinearity),
        Command::Dynamics(a) => (a, |c, _| cmd_dynamics(c)),
        Command::Memory(a) => (a, |c, _| cmd_memory(c)),
        Command::Verify(a) => (a, |c, _| cmd_verify(c)),
    };
    let config = match load(args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let outcome = run(&config, args.threads);
    report(&outcome);
    ExitCode::from(outcome.exit_code() as u8)
}
