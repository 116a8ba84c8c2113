use std::process::ExitCode;

use clap::Parser;
use wmh_cli::Cli;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match wmh_cli::run(Cli::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", wmh_cli::describe(&e));
            eprintln!("run `wmh --help` for usage");
            ExitCode::from(2)
        }
    }
}
