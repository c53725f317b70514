use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use phi4_core::config::ConfigBuilder;
use phi4_core::harness::{run_command, Command};

/// Simulate and test the renormalized Φ⁴₂ stochastic quantization equation.
#[derive(Parser, Debug)]
#[command(name = "phi4", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Ensemble runs of the shifted equation
    Simulate(RunArgs),
    /// Coupling-contraction experiment over the configured λ sweep
    Couple(RunArgs),
    /// pCN sampling of the Gibbs measure to file
    Gibbs(RunArgs),
    /// KS test of invariance of the Gibbs measure under the dynamics
    Invariance(RunArgs),
    /// Time averages from two initial conditions against Gibbs means
    Ergodic(RunArgs),
    /// Randomized checks of the Besov inequalities and Wick identities
    Propcheck(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Configuration file (`section.key = value` lines)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Master seed; overrides `run.seed`
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory; nothing is written outside it
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Override one key, applied after the file (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Sub {
    fn split(&self) -> (Command, &RunArgs) {
        match self {
            Sub::Simulate(a) => (Command::Simulate, a),
            Sub::Couple(a) => (Command::Couple, a),
            Sub::Gibbs(a) => (Command::Gibbs, a),
            Sub::Invariance(a) => (Command::Invariance, a),
            Sub::Ergodic(a) => (Command::Ergodic, a),
            Sub::Propcheck(a) => (Command::Propcheck, a),
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), (u8, String)> {
    let (cmd, args) = cli.command.split();
    let mut builder = ConfigBuilder::default();
    let config_error = |e: phi4_core::Error| (2, e.to_string());
    builder.apply_file(&args.config).map_err(config_error)?;
    for o in &args.overrides {
        builder.apply_override(o).map_err(config_error)?;
    }
    if let Some(seed) = args.seed {
        builder.set("run.seed", &seed.to_string()).map_err(config_error)?;
    }
    let cfg = builder.build().map_err(config_error)?;
    let outcome = run_command(cmd, &cfg, &args.out).map_err(|e| (1, e.to_string()))?;
    println!("records: {}", outcome.records.display());
    println!("summary: {}", outcome.summary.display());
    if let Some(passed) = outcome.passed {
        println!("verdict: {}", if passed { "pass" } else { "fail" });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("phi4: {msg}");
            ExitCode::from(code)
        }
    }
}
