mod commands;
mod config;
mod failure;
mod problem;
mod report;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Resolved, Settings};
use failure::Failure;

/// Ground-state energy bounds by iterating from a trial function.
#[derive(Parser)]
#[command(name = "groundstate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate to convergence and write the run report
    Solve(Settings),
    /// Run the full property suite and write a verdict
    Verify(Settings),
    /// Tabulate the iteration against exact energies and perturbation theory
    Compare(Settings),
    /// Finite-difference reference energy with Richardson extrapolation
    Oracle(Settings),
    /// Defect and mode-sum checks of the box Green's kernels
    Greens(Settings),
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve(s) => commands::solve(&Resolved::from_settings(&Settings::load(&s)?)?),
        Command::Verify(s) => commands::verify(&Resolved::from_settings(&Settings::load(&s)?)?),
        Command::Compare(s) => commands::compare(&Resolved::from_settings(&Settings::load(&s)?)?),
        Command::Oracle(s) => commands::oracle(&Resolved::from_settings(&Settings::load(&s)?)?),
        Command::Greens(s) => commands::greens(&Settings::load(&s)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(failure::CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
