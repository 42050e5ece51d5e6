//! Flat `key = value` run configuration merged underneath command-line flags.
//!
//! ```text
//! # thresholds for the post step
//! th1 = 0.3
//! th2 = 0.1
//! jobs = 4
//! ```
//!
//! Keys are long flag names without the leading dashes. A key is applied only
//! when the chosen subcommand (or the top-level command) has that flag and the
//! flag was not given explicitly.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::Command;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEntry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn parse_config(text: &str) -> Result<Vec<ConfigEntry>> {
    let mut out: Vec<ConfigEntry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("config line {}: expected key = value", i + 1))
        })?;
        let key = key.trim().trim_start_matches("--").to_string();
        if key.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "config line {}: empty key",
                i + 1
            )));
        }
        if out.iter().any(|e| e.key == key) {
            return Err(Error::InvalidConfig(format!(
                "config line {}: duplicate key {key:?}",
                i + 1
            )));
        }
        out.push(ConfigEntry {
            line: i + 1,
            key,
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<Vec<ConfigEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

fn has_long(cmd: &Command, key: &str) -> Option<bool> {
    cmd.get_arguments()
        .find(|a| a.get_long() == Some(key))
        .map(|a| a.get_action().takes_values())
}

fn given(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let prefix = format!("--{key}=");
    args.iter().any(|a| {
        let a = a.to_string_lossy();
        a == flag.as_str() || a.starts_with(&prefix)
    })
}

fn parse_bool(entry: &ConfigEntry) -> Result<bool> {
    match entry.value.as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        v => Err(Error::InvalidConfig(format!(
            "config line {}: {:?} expects true or false, got {v:?}",
            entry.line, entry.key
        ))),
    }
}

/// Index of the subcommand name in `args`, skipping top-level options.
fn subcommand_position(root: &Command, args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if let Some(flag) = a.strip_prefix("--") {
            if !flag.contains('=') && has_long(root, flag) == Some(true) {
                i += 1;
            }
        } else if root.find_subcommand(a.as_ref()).is_some() {
            return Some(i);
        }
        i += 1;
    }
    None
}

/// Inserts config values as flags right after the subcommand name, so that
/// explicit flags are seen as well and take precedence.
///
/// Keys unknown to every command are rejected; keys owned only by other
/// subcommands are ignored.
pub fn merge_args(
    root: &Command,
    args: Vec<OsString>,
    entries: &[ConfigEntry],
) -> Result<Vec<OsString>> {
    let Some(pos) = subcommand_position(root, &args) else {
        return Ok(args);
    };
    let name = args[pos].to_string_lossy().into_owned();
    let sub = root.find_subcommand(&name).expect("located above");
    let mut inserted: Vec<OsString> = Vec::new();
    for entry in entries {
        if entry.key == "config" {
            continue;
        }
        let takes_value = match has_long(sub, &entry.key).or_else(|| has_long(root, &entry.key)) {
            Some(t) => t,
            None => {
                if root
                    .get_subcommands()
                    .any(|s| has_long(s, &entry.key).is_some())
                {
                    continue;
                }
                return Err(Error::InvalidConfig(format!(
                    "config line {}: unknown key {:?}",
                    entry.line, entry.key
                )));
            }
        };
        if given(&args, &entry.key) {
            continue;
        }
        if takes_value {
            inserted.push(format!("--{}={}", entry.key, entry.value).into());
        } else if parse_bool(entry)? {
            inserted.push(format!("--{}", entry.key).into());
        }
    }
    let mut out = args;
    out.splice(pos + 1..pos + 1, inserted);
    Ok(out)
}
