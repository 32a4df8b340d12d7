//! Flat `key = value` config files. Entries become `--key=value` arguments
//! placed before the user's own flags, so flags given on the command line
//! win.

use std::ffi::OsString;

use crate::CliError;

pub const SUBCOMMANDS: [&str; 5] = ["test", "ci", "simulate", "power", "reproduce"];

/// Global options that take a value and may precede the subcommand.
const GLOBAL_VALUED: [&str; 2] = ["--config", "--threads"];

pub fn parse(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::usage(format!("config line {}: expected key=value", k + 1)));
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(CliError::usage(format!("config line {}: invalid key '{}'", k + 1, key)));
        }
        out.push((key, value.trim().to_owned()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

fn subcommand_position(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if SUBCOMMANDS.contains(&s.as_ref()) {
            return Some(i);
        }
        i += if GLOBAL_VALUED.contains(&s.as_ref()) { 2 } else { 1 };
    }
    None
}

/// Expand `--config FILE` into explicit arguments.
pub fn expand_args(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.to_string_lossy())))?;
    let entries = parse(&text)?;
    let Some(pos) = subcommand_position(&args) else {
        return Ok(args);
    };
    let mut out: Vec<OsString> = args[..=pos].to_vec();
    // the reproduce target is positional and must stay first
    let mut rest = args[pos + 1..].iter().peekable();
    if args[pos] == "reproduce" {
        if let Some(t) = rest.next_if(|a| !a.to_string_lossy().starts_with('-')) {
            out.push(t.clone());
        }
    }
    out.extend(entries.iter().map(|(k, v)| OsString::from(format!("--{k}={v}"))));
    out.extend(rest.cloned());
    Ok(out)
}
