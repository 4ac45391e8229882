use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use snlab::config::load_config;
use snlab::runs::{run_acausality, run_linearity, run_omega_g, run_oracle_check};
use snlab::{init_thread_pool, HarnessError};

/// Numerical experiments with self-attracting wavepackets: branch-ensemble
/// propagation, the mixing/operation linearity gate, and detected-vs-
/// undetected divergence.
#[derive(Parser)]
#[command(name = "snlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detected-vs-undetected evolution of a probe that scattered light.
    Acausality(RunArgs),
    /// Mixing/operation commutation defect for the linear and nonlinear maps.
    Linearity(RunArgs),
    /// Self-attraction frequency from a radial density profile.
    OmegaG(RunArgs),
    /// Grid propagators against the closed-form moment oracle.
    OracleCheck(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.directory from the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn dispatch(command: &Command) -> Result<bool, HarnessError> {
    let (name, args): (&str, &RunArgs) = match command {
        Command::Acausality(a) => ("acausality", a),
        Command::Linearity(a) => ("linearity", a),
        Command::OmegaG(a) => ("omega-g", a),
        Command::OracleCheck(a) => ("oracle-check", a),
    };
    let cfg = load_config(&args.config, args.out.as_deref())?;
    let verdict = match command {
        Command::Acausality(_) => run_acausality(&cfg)?,
        Command::Linearity(_) => run_linearity(&cfg)?,
        Command::OmegaG(_) => run_omega_g(&cfg)?,
        Command::OracleCheck(_) => run_oracle_check(&cfg)?,
    };
    println!(
        "{name}: {} ({} checks, output in {})",
        verdict.verdict,
        verdict.checks.len(),
        cfg.out_dir.display()
    );
    Ok(verdict.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    init_thread_pool();
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ (HarnessError::Config(_) | HarnessError::Io(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e @ HarnessError::Numerical(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
