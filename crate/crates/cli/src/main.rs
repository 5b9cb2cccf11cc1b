//! `keychain` command-line front end.

mod adv;
mod bench;
mod generate;
mod report;
mod solve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use keychain_core::{InstanceKind, KeychainError};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "keychain",
    version,
    about = "Solvers and oracles for keychain problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Copy)]
pub struct SeedArg {
    /// RNG seed; falls back to KEYCHAIN_SEED, then 0.
    #[arg(long, env = "KEYCHAIN_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and write a result JSON.
    Solve(solve::SolveArgs),
    /// Exact value of a policy on an instance.
    Eval(solve::EvalArgs),
    /// Exact optimum by exhaustive search.
    Oracle(solve::OracleArgs),
    /// Write a generated instance.
    Gen(generate::GenArgs),
    /// Run a benchmark suite and write a CSV table.
    Bench(bench::BenchArgs),
    /// Minimax policy mixture against a set of priors.
    Adv(adv::AdvArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    #[value(alias = "known_order")]
    KnownOrder,
    Scenarios,
    #[value(aliases = ["multi_key", "multikey"])]
    MultiKey,
    #[value(aliases = ["order", "order_selection"])]
    OrderSelection,
    Wobm,
}

impl From<KindArg> for InstanceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::KnownOrder => InstanceKind::KnownOrder,
            KindArg::Scenarios => InstanceKind::Scenarios,
            KindArg::MultiKey => InstanceKind::MultiKey,
            KindArg::OrderSelection => InstanceKind::OrderSelection,
            KindArg::Wobm => InstanceKind::Wobm,
        }
    }
}

/// Where the input or output of a command went wrong.
#[derive(Debug)]
pub enum Failure {
    Validation(anyhow::Error),
    Solver(anyhow::Error),
}

impl From<KeychainError> for Failure {
    fn from(e: KeychainError) -> Self {
        if e.is_validation() {
            Failure::Validation(e.into())
        } else {
            Failure::Solver(e.into())
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<KeychainError>() {
            Ok(k) => k.into(),
            Err(e) => Failure::Validation(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Validation(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Validation(e.into())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Validation(e.into())
    }
}

pub type CmdResult<T = ()> = std::result::Result<T, Failure>;

/// Writes `text` to `path`, or stdout when no path is given.
pub fn emit(path: Option<&PathBuf>, text: &str) -> CmdResult {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::Validation(anyhow::anyhow!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(a) => solve::run_solve(&a),
        Command::Eval(a) => solve::run_eval(&a),
        Command::Oracle(a) => solve::run_oracle(&a),
        Command::Gen(a) => generate::run(&a),
        Command::Bench(a) => bench::run(&a),
        Command::Adv(a) => adv::run(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver error: {e:#}");
            ExitCode::from(3)
        }
    }
}
