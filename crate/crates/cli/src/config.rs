//! Resolved-config snapshots and config-file merging.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::parser::ValueSource;
use clap::ArgMatches;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::args::Command;
use crate::bundle::write_json;

pub const SNAPSHOT_FILE: &str = "config.json";

/// Writes `out/config.json` describing `cmd` completely.
pub fn write_snapshot(out: &Path, cmd: &Command) -> Result<()> {
    write_json(&out.join(SNAPSHOT_FILE), cmd)
}

/// Reads a snapshot back into a runnable command.
pub fn read_snapshot(path: &Path) -> Result<Command> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read snapshot {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not a valid snapshot", path.display()))
}

/// Fills every setting of `parsed` that was not given on the command line
/// from the JSON file at `path`. The file is either a snapshot of the same
/// command or a flat object of settings.
pub fn merge_config<T: Serialize + DeserializeOwned>(parsed: &T, matches: &ArgMatches, command: &str, path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let file: Value = serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))?;
    let settings = match file.get("command") {
        Some(Value::String(c)) if c == command => file.get("args").cloned().unwrap_or(Value::Null),
        Some(Value::String(c)) => bail!("{} is a snapshot of `{c}`, not `{command}`", path.display()),
        _ => file,
    };
    let Value::Object(settings) = settings else {
        bail!("{}: expected a JSON object of settings", path.display());
    };
    let mut current = serde_json::to_value(parsed)?;
    let fields = current.as_object_mut().expect("arguments serialize to an object");
    for (key, value) in settings {
        if !fields.contains_key(&key) {
            bail!("{}: unknown setting {key:?} for `{command}`", path.display());
        }
        let from_cli = matches!(matches.try_get_raw(&key), Ok(Some(_))) && matches.value_source(&key) == Some(ValueSource::CommandLine);
        if !from_cli {
            fields.insert(key, value);
        }
    }
    serde_json::from_value(current).with_context(|| format!("{}: settings have the wrong type", path.display()))
}
