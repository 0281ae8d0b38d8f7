use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qecinsitu::commands;
use qecinsitu::config::{ExperimentConfig, Overrides};
use qecinsitu::table::ResultTable;

#[derive(Parser)]
#[command(name = "qecinsitu", version, about = "Syndrome-statistics experiments: channel \
estimation and error-model discrimination on small codes")]
struct Cli {
    /// JSON configuration file; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed (required here or in the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of simulation runs.
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Rounds of error correction per run.
    #[arg(long, global = true)]
    rounds: Option<usize>,
    /// Control policy: no-control, unitary-control, random-tau,
    /// unitary-and-random-tau.
    #[arg(long, global = true)]
    policy: Option<String>,
    /// Data-generating hypothesis: H0 or H1.
    #[arg(long = "true-hypothesis", global = true)]
    true_hypothesis: Option<String>,
    /// Output CSV path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Uncorrectable-error probability over a duration grid.
    SweepR,
    /// Sequential estimation of (omega, gamma) under a control policy.
    Estimate,
    /// Correlated- vs uncorrelated-noise model selection.
    Hypothesis,
    /// Oracle-equivalence suites; nonzero exit on any failure.
    Validate,
    /// Five-qubit syndrome likelihoods for a configured channel.
    FiveQubitLikelihood,
    /// Transfer and process matrices for a configured channel.
    Choi,
}

fn emit(table: &ResultTable, out: Option<&PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => table.write_to(path),
        None => {
            print!("{}", table.to_csv());
            Ok(())
        }
    }
}

fn run() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    let overrides = Overrides {
        seed: cli.seed,
        runs: cli.runs,
        rounds: cli.rounds,
        policy: cli.policy.clone(),
        true_hypothesis: cli.true_hypothesis.clone(),
        out: cli.out.clone(),
    };
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &overrides)?;
    let (table, ok) = match cli.command {
        Command::SweepR => (commands::cmd_sweep_r(&cfg)?, true),
        Command::Estimate => (commands::cmd_estimation(&cfg)?, true),
        Command::Hypothesis => (commands::cmd_hypothesis(&cfg)?, true),
        Command::Validate => commands::cmd_validate(&cfg)?,
        Command::FiveQubitLikelihood => (commands::cmd_five_qubit_likelihood(&cfg)?, true),
        Command::Choi => (commands::cmd_choi(&cfg)?, true),
    };
    emit(&table, cfg.out.as_ref())?;
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::init();
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
