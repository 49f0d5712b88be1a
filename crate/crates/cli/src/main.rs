mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Design(a) => commands::design(a),
        Command::Calibrate(a) => commands::calibrate_cmd(a),
        Command::Roc(a) => commands::roc(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Sense(a) => commands::sense(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
