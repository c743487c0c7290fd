use std::process::ExitCode;

use clap::Parser;
use qqt_cli::cli::{Cli, Command};
use qqt_cli::commands;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Extrapolate(a) => commands::extrapolate(a),
        Command::Mix(a) => commands::mix(a),
        Command::Recommend(a) => commands::recommend(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::SweepK(a) => commands::sweep_k(a),
    };
    match result {
        Ok(out) => {
            eprint!("{}", out.stderr);
            print!("{}", out.stdout);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qqt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
