use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use wiretap_region::args::Cli;
use wiretap_region::commands;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wiretap-region: {e}");
            e.exit_code()
        }
    }
}
