//! Resolved run configurations and `--config` file overlays.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Replaces values in `base` with those in `overlay`. Every overlay key must
/// already exist in `base`.
pub fn overlay(base: &mut Value, top: &Value, at: &str) -> CliResult<()> {
    match (base, top) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                let path = if at.is_empty() {
                    k.clone()
                } else {
                    format!("{at}.{k}")
                };
                let slot = b
                    .get_mut(k)
                    .ok_or_else(|| CliError::Usage(format!("unknown config key '{path}'")))?;
                if slot.is_object() && v.is_object() {
                    overlay(slot, v, &path)?;
                } else {
                    *slot = v.clone();
                }
            }
            Ok(())
        }
        _ => Err(CliError::Usage(format!(
            "config {} must be a JSON object",
            if at.is_empty() { "file" } else { at }
        ))),
    }
}

/// Applies the config file at `path`, if any, on top of the flag-derived
/// configuration.
pub fn resolve<T: Serialize + DeserializeOwned>(
    from_flags: T,
    path: Option<&Path>,
) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(from_flags);
    };
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let file: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: invalid JSON: {e}", path.display())))?;
    let mut merged = serde_json::to_value(&from_flags).expect("configs serialize");
    overlay(&mut merged, &file, "")?;
    serde_json::from_value(merged).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Prints the configuration a run actually uses as one JSON line on stderr.
pub fn announce<T: Serialize>(cfg: &T) {
    eprintln!("{}", serde_json::to_string(cfg).expect("configs serialize"));
}
