mod args;
mod consistency;
mod oracle;
mod output;
mod rank;
mod simulate;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use output::CliError;

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Rank(a) => rank::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Oracle(c) => oracle::run(c),
        Command::Consistency(a) => consistency::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    let result = match cli.threads {
        Some(0) => Err(output::invalid("--threads must be at least 1")),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command)),
            Err(e) => Err(CliError::Compute(format!("cannot start thread pool: {e}"))),
        },
        None => dispatch(&cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
