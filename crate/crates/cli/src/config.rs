//! `key = value` config files. Blank lines and `#` comments are ignored.
//! Keys may be dotted (`encoder.d_model`) to reach nested sections; flag
//! overrides are applied after the file, so flags win.

use std::fs;
use std::path::Path;

use anyhow::Result;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::usage;

/// Ordered key/value pairs; later entries override earlier ones.
pub type Overrides = Vec<(String, String)>;

pub fn parse_kv(text: &str, origin: &str) -> Result<Overrides> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{origin}:{}: expected `key = value`", i + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(usage(format!("{origin}:{}: empty key", i + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Reads a `key = value` file, or the resolved config of a run manifest
/// when the path ends in `.json`.
pub fn read_kv(path: &Path) -> Result<Overrides> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let manifest: Value = serde_json::from_str(&text)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let config = manifest
            .get("config")
            .ok_or_else(|| usage(format!("{}: no `config` object", path.display())))?;
        let mut out = Vec::new();
        flatten(config, "", &mut out);
        return Ok(out);
    }
    parse_kv(&text, &path.display().to_string())
}

/// Dotted keys for every non-object leaf, values in JSON form.
fn flatten(value: &Value, prefix: &str, out: &mut Overrides) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(v, &key, out);
            }
        }
        leaf => out.push((prefix.to_string(), leaf.to_string())),
    }
}

/// Config file entries followed by `--set key=value` flags.
pub fn gather(file: Option<&Path>, sets: &[String]) -> Result<Overrides> {
    let mut out = match file {
        Some(p) => read_kv(p)?,
        None => Vec::new(),
    };
    for s in sets {
        out.extend(parse_kv(s, "--set")?);
    }
    Ok(out)
}

/// Interprets a raw value against the type of the value it replaces.
fn coerce(raw: &str, current: &Value) -> Value {
    if matches!(current, Value::Array(_)) && !raw.starts_with('[') {
        let items = raw
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_string())))
            .collect();
        return Value::Array(items);
    }
    if raw == "none" {
        return Value::Null;
    }
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Applies `overrides` to `base` through its serialized form. Keys must name
/// existing fields; `default_section` prefixes undotted keys that are not
/// top-level fields.
pub fn apply<T: Serialize + DeserializeOwned>(
    base: &T,
    overrides: &Overrides,
    default_section: Option<&str>,
) -> Result<T> {
    let mut root = serde_json::to_value(base)?;
    for (key, raw) in overrides {
        let top_level = root.get(key.as_str()).is_some();
        let full = match default_section {
            Some(s) if !key.contains('.') && !top_level => format!("{s}.{key}"),
            _ => key.clone(),
        };
        let mut slot = &mut root;
        for part in full.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(part))
                .ok_or_else(|| usage(format!("unknown config key `{key}`")))?;
        }
        *slot = coerce(raw, slot);
    }
    serde_json::from_value(root).map_err(|e| usage(format!("invalid config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Inner {
        width: usize,
    }

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Outer {
        rate: f64,
        name: String,
        ks: Vec<usize>,
        cap: Option<f64>,
        inner: Inner,
    }

    fn base() -> Outer {
        Outer {
            rate: 0.5,
            name: "a".into(),
            ks: vec![1],
            cap: Some(1.0),
            inner: Inner { width: 3 },
        }
    }

    #[test]
    fn later_entries_win_and_types_follow_the_field() {
        let kv = parse_kv("# c\nrate = 0.25\nname = b  # trailing\nks = 1,5,10\ncap = none\ninner.width=7\nrate=0.75", "t").unwrap();
        let out = apply(&base(), &kv, None).unwrap();
        assert_eq!(
            out,
            Outer {
                rate: 0.75,
                name: "b".into(),
                ks: vec![1, 5, 10],
                cap: None,
                inner: Inner { width: 7 },
            }
        );
    }

    #[test]
    fn unknown_keys_and_malformed_lines_are_usage_errors() {
        assert!(apply(&base(), &vec![("nope".into(), "1".into())], None).is_err());
        assert!(parse_kv("just words", "t").is_err());
        assert!(apply(&base(), &vec![("rate".into(), "fast".into())], None).is_err());
    }

    #[test]
    fn flattened_snapshot_reproduces_the_config() {
        let target = Outer {
            rate: 0.125,
            name: "x y".into(),
            ks: vec![2, 3],
            cap: None,
            inner: Inner { width: 9 },
        };
        let mut kv = Vec::new();
        flatten(&serde_json::to_value(&target).unwrap(), "", &mut kv);
        assert_eq!(apply(&base(), &kv, None).unwrap(), target);
    }
}
