//! Merging a JSON config file with command-line flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::{Map, Value};

pub fn read_object(path: Option<&Path>) -> Result<Map<String, Value>> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))? {
        Value::Object(map) => Ok(map),
        _ => bail!("{} must contain a JSON object", path.display()),
    }
}

/// Set `key` when the flag was given.
pub fn set<T: serde::Serialize>(map: &mut Map<String, Value>, key: &str, flag: &Option<T>) {
    if let Some(v) = flag {
        map.insert(key.to_string(), serde_json::to_value(v).expect("flag values serialize"));
    }
}

/// Overlay every non-null field of `flags` onto the config object.
pub fn merge_flat<T: serde::Serialize>(mut base: Map<String, Value>, flags: &T) -> Map<String, Value> {
    if let Value::Object(f) = serde_json::to_value(flags).expect("flag values serialize") {
        for (k, v) in f {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    base
}

pub fn get<T: serde::de::DeserializeOwned>(map: &Map<String, Value>, key: &str) -> Result<Option<T>> {
    match map.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .with_context(|| format!("invalid value for `{key}`")),
    }
}

pub fn require<T: serde::de::DeserializeOwned>(map: &Map<String, Value>, key: &str) -> Result<T> {
    get(map, key)?.with_context(|| format!("missing `{key}` (flag --{} or config key)", key.replace('_', "-")))
}

/// Worker count: flag or config, else RCS_WORKERS, else 1.
pub fn default_workers() -> Result<usize> {
    match std::env::var("RCS_WORKERS") {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("RCS_WORKERS must be a positive integer, got `{v}`")),
        Err(_) => Ok(1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(serde::Serialize)]
    struct Flags {
        n: Option<usize>,
        kind: Option<String>,
    }

    #[test]
    fn flags_override_config() {
        let mut base = Map::new();
        base.insert("n".into(), Value::from(3));
        base.insert("kind".into(), Value::from("amp_damp"));
        let merged = merge_flat(base, &Flags { n: Some(5), kind: None });
        assert_eq!(require::<usize>(&merged, "n").unwrap(), 5);
        assert_eq!(require::<String>(&merged, "kind").unwrap(), "amp_damp");
    }
}
