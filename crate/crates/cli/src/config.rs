//! Optional JSON config files.
//!
//! A config file is a flat JSON object whose keys are long flag names of the
//! chosen subcommand (`lambda1`, `max_iter`, ...). Its entries are turned into
//! flags and placed before the ones given on the command line, so explicit
//! flags win.

use std::path::Path;

use serde_json::Value;

pub fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

/// Flags equivalent to the entries of a config object.
pub fn config_flags(path: &Path) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| format!("config {} is not valid JSON: {e}", path.display()))?;
    let Value::Object(map) = value else {
        return Err(format!("config {} must be a JSON object", path.display()));
    };
    let mut out = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Bool(true) => out.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(scalar).collect::<Result<_, _>>()?;
                out.push(flag);
                out.push(parts.join(","));
            }
            other => {
                out.push(flag);
                out.push(scalar(&other)?);
            }
        }
    }
    Ok(out)
}

fn scalar(v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => Err(format!("unsupported config value {v}")),
    }
}

/// Insert config flags right after the subcommand name.
pub fn merge(args: Vec<String>, flags: Vec<String>, subcommands: &[&str]) -> Vec<String> {
    let Some(pos) = args.iter().position(|a| subcommands.contains(&a.as_str())) else {
        return args;
    };
    let mut out = args[..=pos].to_vec();
    out.extend(flags);
    out.extend_from_slice(&args[pos + 1..]);
    out
}
