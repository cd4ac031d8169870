//! Experiment files: a JSON object naming a subcommand, its parameters and
//! the global options. Parameters become command-line flags, so a file and
//! the equivalent invocation produce the same artifact.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Deserialize;
use serde_json::Value;

use crate::{Cli, CliError};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub format: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// Table-valued flags; relative paths inside a file resolve against its directory.
fn is_table_flag(key: &str) -> bool {
    key.ends_with("-csv") || key.ends_with("-table") || matches!(key, "word" | "base" | "delta")
}

fn flag_value(key: &str, v: &Value, base: &Path) -> Result<Option<String>, CliError> {
    let text = match v {
        Value::Bool(_) | Value::Null => return Ok(None),
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Array(items) => {
            let parts: Result<Vec<String>, CliError> = items
                .iter()
                .map(|x| match x {
                    Value::String(s) => Ok(s.clone()),
                    Value::Number(n) => Ok(n.to_string()),
                    _ => Err(CliError::Config(format!(
                        "parameter {key}: arrays hold numbers or strings"
                    ))),
                })
                .collect();
            return Ok(Some(parts?.join(",")));
        }
        Value::Object(_) => {
            return Err(CliError::Config(format!(
                "parameter {key}: nested objects are not supported"
            )))
        }
    };
    if is_table_flag(key) {
        let p = Path::new(&text);
        if p.is_relative() && base.join(p).is_file() {
            return Ok(Some(base.join(p).to_string_lossy().into_owned()));
        }
    }
    Ok(Some(text))
}

/// Reads an experiment file into the equivalent command line. Flags given on
/// the real command line next to `--config` take precedence for `--out`.
pub fn load(path: &Path, outer: &Cli) -> Result<Cli, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if text.trim().is_empty() {
        return Err(CliError::Config(format!("{}: empty config", path.display())));
    }
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if value.as_object().is_some_and(|o| o.is_empty()) {
        return Err(CliError::Config(format!("{}: empty config", path.display())));
    }
    let exp: ExperimentConfig =
        serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut argv = vec!["wordgrowth".to_string()];
    if let Some(f) = &exp.format {
        argv.extend(["--format".into(), f.clone()]);
    }
    if let Some(s) = exp.seed {
        argv.extend(["--seed".into(), s.to_string()]);
    }
    match (&outer.out, &exp.out) {
        (Some(o), _) => argv.extend(["--out".into(), o.to_string_lossy().into_owned()]),
        (None, Some(o)) => {
            let o = if o.is_relative() { base.join(o) } else { o.clone() };
            argv.extend(["--out".into(), o.to_string_lossy().into_owned()]);
        }
        (None, None) => {}
    }
    argv.extend(["--threads".into(), outer.threads.to_string()]);
    argv.push(exp.command.clone());
    for (key, v) in &exp.params {
        match v {
            Value::Bool(true) => argv.push(format!("--{key}")),
            _ => {
                if let Some(text) = flag_value(key, v, base)? {
                    argv.push(format!("--{key}"));
                    argv.push(text);
                }
            }
        }
    }
    Cli::try_parse_from(&argv).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))
}
