use std::ffi::OsString;
use std::path::PathBuf;

use crate::error::{Error, Result};

/// Parses flat `key = value` lines; `#` starts a comment, blank lines are skipped.
/// Underscores in keys are read as dashes, so `precision_cap` names `--precision-cap`.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::validation(format!("config line {}: expected key = value", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::validation(format!("config line {}: bad key {k:?}", i + 1)));
        }
        if key == "config" {
            return Err(Error::validation("config files cannot include other config files"));
        }
        match out.iter_mut().find(|(existing, _)| *existing == key) {
            Some(slot) => slot.1 = v.trim().to_string(),
            None => out.push((key, v.trim().to_string())),
        }
    }
    Ok(out)
}

/// The `--config` value, found before full parsing so that config entries can
/// satisfy required flags.
pub fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    argv.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            argv.get(i + 1).map(PathBuf::from)
        } else {
            a.to_str()?.strip_prefix("--config=").map(PathBuf::from)
        }
    })
}

fn names_flag(arg: &OsString, key: &str) -> bool {
    let s = arg.to_string_lossy();
    s.strip_prefix("--")
        .is_some_and(|rest| rest == key || rest.starts_with(&format!("{key}=")))
}

/// Drops `--config <path>` from `argv` and appends `--key=value` for every config
/// entry that the command line does not already set.
pub fn merge_config(argv: &[OsString], entries: &[(String, String)]) -> Result<Vec<OsString>> {
    let mut out = Vec::with_capacity(argv.len() + entries.len());
    let mut skip = false;
    for a in argv {
        if skip {
            skip = false;
            continue;
        }
        if a == "--config" {
            skip = true;
            continue;
        }
        if names_flag(a, "config") {
            continue;
        }
        out.push(a.clone());
    }
    for (k, v) in entries {
        if !out.iter().any(|a| names_flag(a, k)) {
            out.push(format!("--{k}={v}").into());
        }
    }
    Ok(out)
}
