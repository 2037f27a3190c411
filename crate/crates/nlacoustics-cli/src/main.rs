use std::process::ExitCode;

use clap::Parser;
use nlacoustics_cli::config::LogLevel;
use nlacoustics_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are configuration errors; help and version are not errors.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::new().filter_level(log::LevelFilter::Trace).format_timestamp(None).format_target(false).init();
    log::set_max_level(cli.log_level.unwrap_or(LogLevel::default()).filter());
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
