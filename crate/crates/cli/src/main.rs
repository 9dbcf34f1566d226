mod args;
mod commands;
mod fit;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Failure of a command, mapped to an exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, parameters or input files.
    Usage(String),
    /// The numerics broke down (negative probabilities, instability, ...).
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<vg_core::VgError> for CliError {
    fn from(e: vg_core::VgError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Price(a) => commands::price(&a),
        Command::Table(a) => commands::table(&a),
        Command::P3Curve(a) => commands::p3_curve(&a),
        Command::Fit(a) => fit::fit(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, msg) = match &e {
                CliError::Usage(m) => ("error", m),
                CliError::Numerical(m) => ("numerical failure", m),
            };
            eprintln!("vgprice: {kind}: {msg}");
            ExitCode::from(e.exit_code())
        }
    }
}
