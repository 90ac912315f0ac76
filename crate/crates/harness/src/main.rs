use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use radbound_harness::{run_scenario, validate_config, HarnessError, Scenario, ScenarioConfig, OUTPUT_ENV};

#[derive(Parser)]
#[command(name = "radbound", version, about = "Rademacher-complexity bounds and estimators for graph convolutional networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Upper and lower complexity bounds on one instance
    Bound(RunArgs),
    /// Estimate the empirical Rademacher complexity
    Estimate(RunArgs),
    /// Check lower bound ≤ estimate ≤ upper bound
    Sandwich(RunArgs),
    /// Bound growth with graph size
    Scaling(RunArgs),
    /// Audit the generalization bound on teacher-student runs
    Gap(RunArgs),
    /// Validate a config and print it with defaults filled in
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
}

fn load(args: &RunArgs, hint: Option<Scenario>) -> Result<ScenarioConfig, HarnessError> {
    let raw = std::fs::read_to_string(&args.config)?;
    let mut cfg = validate_config(&raw, hint).map_err(HarnessError::Config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Ok(dir) = std::env::var(OUTPUT_ENV) {
        if !dir.is_empty() {
            cfg.output_dir = dir;
        }
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let (args, hint) = match &cli.command {
        Command::Bound(a) => (a, Scenario::Bound),
        Command::Estimate(a) => (a, Scenario::Estimate),
        Command::Sandwich(a) => (a, Scenario::Sandwich),
        Command::Scaling(a) => (a, Scenario::Scaling),
        Command::Gap(a) => (a, Scenario::Gap),
        Command::Validate(a) => {
            let cfg = load(a, None)?;
            println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
            return Ok(());
        }
    };
    let cfg = load(args, Some(hint))?;
    let outcome = run_scenario(&cfg)?;
    println!("{}", outcome.summary);
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
