//! Flat TOML config files whose keys are the long flag names.
//!
//! Precedence is flag (or environment) over file over built-in default.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{usage, Result};

/// Overlays the flags that were actually given on top of the file's keys.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, file: Option<&Path>) -> Result<T> {
    let Some(path) = file else { return Ok(flags_only(flags)) };
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let table: toml::Table = text.parse().map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut merged: Map<String, Value> = match serde_json::to_value(table) {
        Ok(Value::Object(m)) => m,
        _ => return Err(usage(format!("{}: expected a flat table", path.display()))),
    };
    if let Value::Object(given) = serde_json::to_value(flags).expect("flags serialize") {
        merged.extend(given.into_iter().filter(|(_, v)| is_given(v)));
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn flags_only<T: Serialize + DeserializeOwned>(flags: &T) -> T {
    let v = serde_json::to_value(flags).expect("flags serialize");
    serde_json::from_value(v).expect("flags round-trip")
}

/// Unset options serialize as `null` and unset switches as `false`.
fn is_given(v: &Value) -> bool {
    !matches!(v, Value::Null | Value::Bool(false))
}

/// Renders a resolved config back to the same flat format.
pub fn render<T: Serialize>(value: &T) -> String {
    toml::to_string(value).expect("config renders as TOML")
}
