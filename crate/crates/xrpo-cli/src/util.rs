//! Shared helpers: config loading with overrides, JSONL reading.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use sha2::{Digest, Sha256};
use xrpo::{Result, XrpoError};

/// Load a JSON config file, apply `key.path=value` overrides, and
/// deserialize into `T` (unknown fields rejected by the target type).
pub fn load_config<T: DeserializeOwned>(path: &Path, overrides: &[String]) -> Result<T> {
    let raw = fs::read_to_string(path)?;
    let mut value: serde_json::Value = serde_json::from_str(&raw)
        .map_err(|e| XrpoError::Config(format!("{}: {e}", path.display())))?;
    for item in overrides {
        apply_override(&mut value, item)?;
    }
    serde_json::from_value(value).map_err(|e| XrpoError::Config(format!("{}: {e}", path.display())))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

/// Apply one `dotted.path=json_or_string` override to a JSON tree.
pub fn apply_override(root: &mut serde_json::Value, item: &str) -> Result<()> {
    let (path, raw) = item.split_once('=').ok_or_else(|| {
        XrpoError::Config(format!("override '{item}' must look like path.to.field=value"))
    })?;
    if path.is_empty() {
        return Err(XrpoError::Config(format!("override '{item}' has an empty path")));
    }
    let parsed: serde_json::Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| {
            XrpoError::Config(format!(
                "override '{item}': '{}' is not an object",
                parts[..i].join(".")
            ))
        })?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    unreachable!("loop always returns on the last path segment")
}

/// Read a JSONL file into typed rows, reporting the failing row number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let raw = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: T = serde_json::from_str(line).map_err(|e| XrpoError::Schema {
            row: i + 1,
            msg: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn override_sets_nested_and_typed_values() {
        let mut v = serde_json::json!({"a": {"b": 1}, "keep": true});
        apply_override(&mut v, "a.b=2").unwrap();
        apply_override(&mut v, "a.c.d=false").unwrap();
        apply_override(&mut v, "name=uniform").unwrap();
        assert_eq!(v["a"]["b"], 2);
        assert_eq!(v["a"]["c"]["d"], false);
        // Bare words that are not valid JSON become strings.
        assert_eq!(v["name"], "uniform");
        assert_eq!(v["keep"], true);
    }

    #[test]
    fn override_rejects_bad_shapes() {
        let mut v = serde_json::json!({"a": 1});
        assert!(apply_override(&mut v, "no-equals").is_err());
        assert!(apply_override(&mut v, "=5").is_err());
        // Cannot descend through a scalar.
        assert!(apply_override(&mut v, "a.b=1").is_err());
    }

    proptest! {
        /// Setting any dotted path then reading it back returns the value.
        #[test]
        fn override_roundtrips(
            parts in proptest::collection::vec("[a-z][a-z0-9_]{0,8}", 1..4),
            number in -1e6_f64..1e6,
        ) {
            let mut v = serde_json::json!({});
            let path = parts.join(".");
            apply_override(&mut v, &format!("{path}={number}")).unwrap();
            let mut node = &v;
            for part in &parts {
                node = &node[part];
            }
            prop_assert_eq!(node.as_f64().unwrap(), number);
        }
    }
}
