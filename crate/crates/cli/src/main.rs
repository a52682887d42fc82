mod cli;
mod commands;
mod config;
mod error;
mod manifest;
mod plot;

use std::process::ExitCode;

use clap::Parser;

use cli::{Cli, Command};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Synth(a) => commands::synth::run(a, &cli.out_root),
        Command::Train(a) => commands::train::run(a, &cli.out_root),
        Command::Eval(a) => commands::eval::run(a, &cli.out_root),
        Command::Report(a) => commands::report::run(a, &cli.out_root),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            error::exit_code(&e)
        }
    }
}
