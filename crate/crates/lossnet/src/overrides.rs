//! `--set key.path=value` overrides on a loaded config.
//!
//! The config is first parsed into its typed form, so defaults are filled in,
//! then turned back into JSON. An override must name a key that exists in
//! that JSON; array elements are addressed by index (`lambda_grid.2=800`).
//! The value is read as JSON when it parses and as a plain string otherwise.

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

/// Splits `key=value`.
pub fn parse_override(raw: &str) -> Result<(&str, Value)> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{raw}` is not of the form KEY=VALUE"))?;
    let key = key.trim();
    if key.is_empty() {
        bail!("override `{raw}` has an empty key");
    }
    let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    Ok((key, value))
}

fn apply_one(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut node = root;
    for part in key.split('.') {
        node = match node {
            Value::Object(map) => map.get_mut(part),
            Value::Array(items) => part.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| anyhow!("unknown override key `{key}`"))?;
    }
    *node = value;
    Ok(())
}

/// Parses `text` as `T`, applies the overrides and parses again.
pub fn load_with_overrides<T>(text: &str, overrides: &[String]) -> Result<T>
where
    T: Serialize + DeserializeOwned,
{
    let typed: T =
        serde_json::from_str(text).context("config does not match the expected schema")?;
    if overrides.is_empty() {
        return Ok(typed);
    }
    let mut value = serde_json::to_value(&typed)?;
    for raw in overrides {
        let (key, v) = parse_override(raw)?;
        apply_one(&mut value, key, v)?;
    }
    serde_json::from_value(value)
        .context("config after overrides does not match the expected schema")
}
