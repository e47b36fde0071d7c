// SPDX-License-Identifier: MIT OR Apache-2.0

//! `nsqcd` command-line tool.

mod args;
mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<std::ffi::OsString> = std::env::args_os().collect();
    let merged = match config::merge(argv.clone()) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("nsqcd: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = match args::Cli::try_parse_from(&merged) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let echo = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    ExitCode::from(commands::dispatch(cli, echo))
}
