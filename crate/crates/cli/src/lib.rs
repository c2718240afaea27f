//! Command-line companion for the double sparse regression solver: fit CSV
//! datasets, run seeded synthetic scenarios, and benchmark the solver, all
//! with byte-stable outputs and a fixed exit-code contract.

pub mod acceptance;
pub mod args;
pub mod bench_cmd;
pub mod error;
pub mod fit_cmd;
pub mod io;
pub mod sim_cmd;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};

/// Dispatch a parsed command line.
pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Fit(args) => fit_cmd::run(args),
        Command::Simulate(args) => sim_cmd::run(args),
        Command::Bench(args) => bench_cmd::run(args),
    }
}
