// SPDX-License-Identifier: MIT OR Apache-2.0

//! Flat TOML configuration files.
//!
//! Each key names a long flag (`sigma0-sq` or `sigma0_sq`). Values become
//! extra command-line arguments unless the flag is already present, so flags
//! given on the command line always win.

use std::ffi::OsString;
use std::path::Path;

use crate::error::{CliError, CliResult};

/// Path given via `--config`, if any.
pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            return iter.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

fn flag_present(args: &[OsString], flag: &str) -> bool {
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&format!("{flag}="))
    })
}

fn scalar(key: &str, value: &toml::Value) -> CliResult<String> {
    Ok(match value {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Datetime(d) => d.to_string(),
        _ => return Err(CliError::usage(format!("config key `{key}` must be a scalar or a flat list"))),
    })
}

/// Returns `args` extended with every config entry not overridden on the command line.
pub fn merge(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| {
        CliError::usage(format!("cannot read config file {}: {e}", Path::new(&path).display()))
    })?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| CliError::usage(format!("config file is not valid TOML: {e}")))?;
    let mut merged = args.clone();
    for (key, value) in &table {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" || flag_present(&args, &flag) {
            continue;
        }
        match value {
            toml::Value::Boolean(true) => merged.push(flag.into()),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts = items
                    .iter()
                    .map(|v| scalar(key, v))
                    .collect::<CliResult<Vec<_>>>()?;
                merged.push(format!("{flag}={}", parts.join(",")).into());
            }
            other => merged.push(format!("{flag}={}", scalar(key, other)?).into()),
        }
    }
    Ok(merged)
}
