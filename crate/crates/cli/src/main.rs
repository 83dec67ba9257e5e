//! `torus-bie`: configuration-driven Laplace solves on flat tori with holes.
//!
//! Exit codes: 0 success, 1 a self-test check failed, 2 configuration or input
//! error, 3 numerical failure, 4 output could not be written.

mod config;
mod examples;
mod expr;
mod output;
mod run;
mod setup;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ConfigError;
use crate::run::Options;

#[derive(Parser)]
#[command(name = "torus-bie", version, about = "Laplace boundary integral solvers on flat tori with holes")]
struct Cli {
    /// Worker threads for assembly and field sampling (all cores by default)
    #[arg(long, global = true, value_name = "T")]
    threads: Option<usize>,
    /// Only print errors and failed checks
    #[arg(long, global = true)]
    quiet: bool,
    /// Output directory; overrides the config and $TORUS_BIE_OUT
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a Dirichlet or Neumann problem
    Solve(RunArgs),
    /// Compute Steklov eigenpairs
    Steklov(RunArgs),
    /// Record the error against nodes per hole
    Converge {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
    },
    /// Run the built-in property checks
    Selftest,
    /// Write the example configurations
    Examples,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Nodes per hole, replacing the configured counts
    #[arg(long, value_name = "N")]
    nodes: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Bad input discovered while preparing data.
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] torus_bie::Error),
    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Config(_) | CliError::Data(_) | CliError::Core(_) => 2,
            CliError::Output { .. } => 4,
        }
    }

    /// For callbacks that must return core errors.
    pub fn into_core(self) -> torus_bie::Error {
        match self {
            CliError::Core(e) => e,
            other => torus_bie::Error::InvalidArgument(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        let built = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        if t == 0 || built.is_err() {
            eprintln!("error: --threads must be a positive thread count");
            return ExitCode::from(2);
        }
    }
    let mut opts = Options {
        out: cli.out,
        nodes: None,
        quiet: cli.quiet,
    };
    let result = match cli.command {
        Command::Solve(args) => {
            opts.nodes = args.nodes;
            run::solve(&args.config, &opts)
        }
        Command::Steklov(args) => {
            opts.nodes = args.nodes;
            run::steklov(&args.config, &opts)
        }
        Command::Converge { config } => run::converge(&config, &opts),
        Command::Selftest => match run::selftest(&opts) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(1),
            Err(e) => Err(e),
        },
        Command::Examples => run::write_examples(&opts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
