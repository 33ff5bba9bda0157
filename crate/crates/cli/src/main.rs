// `!(x > 0.0)` style guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod output;

use args::{Cli, Command};

/// Process exit status for each failure class.
#[derive(Debug)]
pub enum CliError {
    Core(khessian::Error),
    /// Unreadable or malformed input.
    Input(String),
    /// Output could not be written.
    Output(String),
    /// `verify` found residuals above the threshold.
    Verification(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Core(khessian::Error::Domain(_)) | CliError::Input(_) => 2,
            CliError::Core(khessian::Error::Regime(_)) => 3,
            CliError::Core(_) | CliError::Output(_) | CliError::Verification(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Output(m) => write!(f, "output error: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<khessian::Error> for CliError {
    fn from(e: khessian::Error) -> Self {
        CliError::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Exponents(a) => commands::exponents(a),
        Command::Orbit(a) => commands::orbit(a),
        Command::Bifurcation(a) => commands::bifurcation(a),
        Command::Solve(a) => commands::solve(a),
        Command::Verify(a) => commands::verify(a),
        Command::LambdaStar(a) => commands::lambda_star(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("khessian: {e}");
            ExitCode::from(e.code())
        }
    }
}
