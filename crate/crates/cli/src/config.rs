//! `key = value` config files. Entries become flags placed right after the
//! subcommand, ahead of the user's own flags, so the latter override them.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::CommandFactory;

use crate::args::Cli;
use crate::error::CliError;

const VALUE_GLOBALS: [&str; 3] = ["--out", "--threads", "--config"];

pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::BadFlag(format!("config line {}: expected key = value", k + 1)))?;
        out.push((key.trim().replace('_', "-"), value.trim().to_owned()));
    }
    Ok(out)
}

/// Index of the subcommand token and the `--config` path, if any.
fn scan(args: &[OsString]) -> (Option<usize>, Option<OsString>) {
    let mut sub = None;
    let mut config = None;
    let mut k = 1;
    while k < args.len() {
        let a = args[k].to_string_lossy();
        if a == "--config" {
            config = args.get(k + 1).cloned();
        } else if let Some(v) = a.strip_prefix("--config=") {
            config = Some(v.into());
        }
        if VALUE_GLOBALS.contains(&a.as_ref()) {
            k += 2;
            continue;
        }
        if !a.starts_with('-') && sub.is_none() {
            sub = Some(k);
        }
        k += 1;
    }
    (sub, config)
}

/// Rewrites `args` with config entries spliced in after the subcommand.
/// Keys belonging only to other subcommands are ignored; keys no subcommand
/// knows are rejected.
pub fn merge(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let (Some(sub_at), Some(path)) = scan(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::BadFlag(format!("cannot read config {}: {e}", path.display())))?;
    let entries = parse_entries(&text)?;

    let cmd = Cli::command();
    let sub_name = args[sub_at].to_string_lossy().into_owned();
    let Some(sub) = cmd.find_subcommand(&sub_name) else {
        return Ok(args);
    };
    let long_of = |c: &clap::Command, key: &str| {
        c.get_arguments()
            .find(|a| a.get_long() == Some(key))
            .map(|a| a.get_action().takes_values())
    };

    let mut injected: Vec<OsString> = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            continue;
        }
        let takes_value = match long_of(sub, &key).or_else(|| long_of(&cmd, &key)) {
            Some(t) => t,
            None if cmd.get_subcommands().any(|s| long_of(s, &key).is_some()) => continue,
            None => return Err(CliError::BadFlag(format!("unknown config key `{key}`"))),
        };
        if takes_value {
            injected.push(format!("--{key}={value}").into());
        } else {
            match value.as_str() {
                "true" => injected.push(format!("--{key}").into()),
                "false" => {}
                _ => return Err(CliError::BadFlag(format!("config key `{key}` expects true or false"))),
            }
        }
    }

    let mut out = Vec::with_capacity(args.len() + injected.len());
    out.push(args[0].clone());
    out.push(args[sub_at].clone());
    out.extend(injected);
    out.extend(
        args.iter()
            .enumerate()
            .filter(|&(k, _)| k != 0 && k != sub_at)
            .map(|(_, a)| a.clone()),
    );
    Ok(out)
}
