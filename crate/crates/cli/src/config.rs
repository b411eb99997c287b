//! `--config FILE` support.
//!
//! Each non-blank line not starting with `#` reads `key = value`, where
//! `key` is a long flag name without dashes. `true` enables a switch and
//! `false` leaves it off. Entries are placed ahead of the command-line
//! flags, so flags given on the command line win.

use std::ffi::OsString;
use std::path::Path;

use crate::error::{usage, CliError};

pub fn parse(text: &str) -> Result<Vec<OsString>, CliError> {
    let mut args = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return usage(format!("config line {}: expected `key = value`", no + 1));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.starts_with('-') || key == "config" {
            return usage(format!("config line {}: bad key `{key}`", no + 1));
        }
        match value {
            "true" => args.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                args.push(format!("--{key}").into());
                args.push(value.into());
            }
        }
    }
    Ok(args)
}

fn config_path(argv: &[OsString]) -> Result<Option<&Path>, CliError> {
    let mut found = None;
    for (i, a) in argv.iter().enumerate() {
        let Some(s) = a.to_str() else { continue };
        if s == "--config" {
            match argv.get(i + 1) {
                Some(p) => found = Some(Path::new(p)),
                None => return usage("--config needs a file"),
            }
        } else if let Some(p) = s.strip_prefix("--config=") {
            found = Some(Path::new(p));
        }
    }
    Ok(found)
}

/// Splice the config file's entries in right after the subcommand name.
pub fn merge(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv)? else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let extra = parse(&text)?;
    let Some(sub) = argv.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')) else {
        return Ok(argv);
    };
    let at = sub + 2;
    let mut merged = argv[..at].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&argv[at..]);
    Ok(merged)
}
