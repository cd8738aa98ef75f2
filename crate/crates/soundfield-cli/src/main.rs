use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    soundfield_cli::init_logging();
    // Usage errors (unknown flags, unparseable values) exit 2 via clap.
    let cli = soundfield_cli::Cli::parse();
    match soundfield_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
