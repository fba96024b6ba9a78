//! `bellcheck`: run the lattice and net checks described by a scenario file.
//!
//! Exit codes: 0 pass, 1 check failure, 2 invalid scenario, 3 internal error.

mod commands;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{CommandError, Outcome};
use scenario::Overrides;

#[derive(Parser)]
#[command(name = "bellcheck", version, about = "Local causality checks on the double-cone lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow the scenario's initial state and write single-cone marginals.
    Simulate(Common),
    /// Run one of the checks and write report.json (and defects.csv).
    Check {
        #[arg(value_enum)]
        which: Which,
        #[command(flatten)]
        common: Common,
    },
    /// Extend the scenario's state half a step into the past.
    ExtendBackward(Common),
    /// Run every check listed in the scenario, each into its own directory.
    Run(Common),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Which {
    LocalCausality,
    Ch,
    CommonCause,
    NoSignaling,
    Axioms,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed of the scenario file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Sample this many screening triples.
    #[arg(long)]
    max_cases: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
}

type Action = fn(&scenario::Scenario) -> Outcome;

fn action(which: Which) -> Action {
    match which {
        Which::LocalCausality => commands::local_causality,
        Which::Ch => commands::ch,
        Which::CommonCause => commands::common_cause,
        Which::NoSignaling => commands::no_signaling,
        Which::Axioms => commands::axioms,
    }
}

/// Every listed check, written below `out/<check>/`. Passes only if all pass.
fn run_listed(sc: &scenario::Scenario) -> Outcome {
    if sc.file.checks.is_empty() {
        return Err(scenario::ValidationError("checks: nothing to run".into()).into());
    }
    let mut listed = Vec::new();
    for (k, name) in sc.file.checks.iter().enumerate() {
        let which = Which::from_str(name, false)
            .map_err(|_| scenario::ValidationError(format!("checks[{k}]: unknown check {name:?}")))?;
        listed.push((name.clone(), which));
    }
    let mut passed = true;
    for (name, which) in listed {
        let sub = scenario::Scenario { out: sc.out.join(&name), ..sc.clone() };
        passed &= action(which)(&sub)?;
    }
    Ok(passed)
}

fn run(cli: Cli) -> Outcome {
    let (common, act): (&Common, Action) = match &cli.command {
        Command::Simulate(c) => (c, commands::simulate),
        Command::ExtendBackward(c) => (c, commands::extend_backward),
        Command::Run(c) => (c, run_listed),
        Command::Check { which, common } => (common, action(*which)),
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CommandError::Internal(e.into()))?;
    }
    let overrides = Overrides {
        seed: common.seed,
        tolerance: common.tolerance,
        max_cases: common.max_cases,
        out: common.out.clone(),
    };
    let sc = scenario::load(&common.scenario, &overrides)?;
    act(&sc)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CommandError::Validation(e)) => {
            eprintln!("invalid scenario: {e}");
            ExitCode::from(2)
        }
        Err(CommandError::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(3)
        }
    }
}
