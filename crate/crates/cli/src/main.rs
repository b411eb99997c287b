use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use pivctl::{config, run, Cli, CliError};

fn main() -> ExitCode {
    let result = config::merge(std::env::args_os().collect()).and_then(|argv| match Cli::try_parse_from(argv) {
        Ok(cli) => run(&cli, &mut std::io::stdout()),
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            Ok(())
        }
        Err(e) => {
            let _ = e.print();
            Err(CliError::Usage(String::new()))
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(&e, CliError::Usage(m) if m.is_empty()) {
                eprintln!("pivctl: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
