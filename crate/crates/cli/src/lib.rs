//! Library behind the `pivctl` binary: argument parsing, config files and
//! the `generate`, `estimate`, `diagnose` and `bench` commands.

pub mod args;
pub mod bench;
pub mod config;
pub mod diagnose;
pub mod error;
pub mod estimate;
mod files;
pub mod generate;
pub mod synth;
mod table;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::{Cli, Command};
pub use error::CliError;

/// Parse `argv` (program name first), merge any `--config` file and run
/// the command, writing the report to `out`.
pub fn run_from<I, T>(argv: I, out: &mut (dyn Write + Send)) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv = config::merge(argv.into_iter().map(Into::into).collect())?;
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    run(&cli, out)
}

pub fn run(cli: &Cli, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let threads = match cli.command.common().threads {
        Some(0) => return error::usage("--threads must be >= 1"),
        Some(n) => n,
        None => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Generate(a) => generate::run(a, out),
        Command::Estimate(a) => estimate::run(a, out),
        Command::Diagnose(a) => diagnose::run(a, out),
        Command::Bench(a) => bench::run(a, out),
    })
}

pub(crate) fn report(out: &mut (dyn Write + Send), line: std::fmt::Arguments) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(|e| CliError::io(std::path::Path::new("<stdout>"), e))
}
