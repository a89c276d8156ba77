//! Optional TOML config whose keys are flag names.
//!
//! ```toml
//! cache = "geonames.idx"          # any subcommand with --cache
//!
//! [eval-geocoding]
//! thresholds = [161, 1000]
//! no_tie_correction = true
//! ```
//!
//! Entries become command-line flags placed right after the subcommand name.
//! A flag the user passes explicitly replaces the config entry.

use std::collections::HashSet;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::ArgAction;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("--config needs a path")]
    MissingPath,
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("config [{section}]: unknown key {key:?}")]
    UnknownKey { section: String, key: String },
    #[error("config key {key:?}: unsupported value")]
    Value { key: String },
}

fn config_path(args: &[OsString]) -> Result<Option<PathBuf>, ConfigError> {
    for (i, a) in args.iter().enumerate() {
        let Some(s) = a.to_str() else { continue };
        if s == "--" {
            break;
        }
        if s == "--config" {
            return args.get(i + 1).map(|p| Some(PathBuf::from(p))).ok_or(ConfigError::MissingPath);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Ok(Some(PathBuf::from(p)));
        }
    }
    Ok(None)
}

/// Position and name of the subcommand: the first argument that is neither
/// an option nor the value of a value-taking global option.
fn find_subcommand(args: &[OsString], cmd: &clap::Command) -> Option<(usize, String)> {
    let takes_value = |long: &str| {
        cmd.get_arguments()
            .any(|a| a.get_long() == Some(long) && matches!(a.get_action(), ArgAction::Set | ArgAction::Append))
    };
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_str()?;
        if let Some(long) = s.strip_prefix("--") {
            if !long.contains('=') && takes_value(long) {
                i += 1;
            }
        } else if !s.starts_with('-') {
            return Some((i, s.to_string()));
        }
        i += 1;
    }
    None
}

fn flag_values(key: &str, flag: &clap::Arg, value: &toml::Value) -> Result<Vec<OsString>, ConfigError> {
    let long = format!("--{}", flag.get_long().expect("looked up by long name"));
    let err = || ConfigError::Value { key: key.to_string() };
    let scalar = |v: &toml::Value| match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(n) => Ok(n.to_string()),
        toml::Value::Float(x) => Ok(x.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        _ => Err(err()),
    };
    Ok(match (flag.get_action(), value) {
        (ArgAction::SetTrue, toml::Value::Boolean(true)) => vec![long.into()],
        (ArgAction::SetTrue, toml::Value::Boolean(false)) => vec![],
        (ArgAction::SetTrue, _) => return Err(err()),
        (_, toml::Value::Array(items)) => {
            let joined = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?.join(",");
            vec![long.into(), joined.into()]
        }
        (_, v) => vec![long.into(), scalar(v)?.into()],
    })
}

/// `args` with the config file's entries for the chosen subcommand inserted.
pub fn expand_args(args: Vec<OsString>, cmd: &clap::Command) -> Result<Vec<OsString>, ConfigError> {
    let Some(path) = config_path(&args)? else {
        return Ok(args);
    };
    let Some((position, name)) = find_subcommand(&args, cmd) else {
        return Ok(args);
    };
    let Some(sub) = cmd.find_subcommand(&name) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Read { path: path.clone(), source })?;
    let table: toml::Table = text.parse().map_err(|source| ConfigError::Parse { path: path.clone(), source })?;

    let given: HashSet<&str> = args[position + 1..]
        .iter()
        .filter_map(|a| a.to_str()?.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a))
        .collect();
    let lookup = |key: &str| {
        let long = key.replace('_', "-");
        sub.get_arguments().find(|a| a.get_long() == Some(long.as_str()))
    };
    let mut injected = Vec::new();
    let mut inject = |key: &str, flag: &clap::Arg, value: &toml::Value| -> Result<(), ConfigError> {
        if !flag.get_long().is_some_and(|l| given.contains(l)) {
            injected.extend(flag_values(key, flag, value)?);
        }
        Ok(())
    };
    for (key, value) in &table {
        if value.is_table() {
            continue;
        }
        match lookup(key) {
            Some(flag) => inject(key, flag, value)?,
            None => log::debug!("config key {key:?} does not apply to {name}"),
        }
    }
    if let Some(section) = table.get(&name).and_then(toml::Value::as_table) {
        for (key, value) in section {
            let flag = lookup(key).ok_or_else(|| ConfigError::UnknownKey { section: name.clone(), key: key.clone() })?;
            inject(key, flag, value)?;
        }
    }

    let mut out = args;
    out.splice(position + 1..position + 1, injected);
    Ok(out)
}
