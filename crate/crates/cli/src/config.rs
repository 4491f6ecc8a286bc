//! Flat dotted-key configuration.
//!
//! Every command has a typed settings struct with defaults. The struct is
//! flattened to `a.b.c` keys, then a JSON file and command-line flags
//! override individual keys, and the result is rebuilt into the struct.
//! Arrays are leaves, so a range is written as `"ranges.density_bg": [8, 14]`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

pub type Flat = BTreeMap<String, Value>;

pub fn flatten(value: &Value) -> Flat {
    fn walk(prefix: &str, v: &Value, out: &mut Flat) {
        match v {
            Value::Object(map) if !map.is_empty() => {
                for (k, child) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, child, out);
                }
            }
            _ => {
                out.insert(prefix.to_string(), v.clone());
            }
        }
    }
    let mut out = Flat::new();
    walk("", value, &mut out);
    out
}

pub fn unflatten(flat: &Flat) -> Value {
    let mut root = Map::new();
    for (key, v) in flat {
        let mut parts: Vec<&str> = key.split('.').collect();
        let last = parts.pop().unwrap_or_default();
        let mut node = &mut root;
        for p in parts {
            node = node
                .entry(p.to_string())
                .or_insert_with(|| Value::Object(Map::new()))
                .as_object_mut()
                .expect("prefix of a flattened key is always an object");
        }
        node.insert(last.to_string(), v.clone());
    }
    Value::Object(root)
}

/// Resolved settings of one run: typed value plus the flat view that goes
/// into the run manifest.
#[derive(Debug, Clone)]
pub struct Resolved<S> {
    pub settings: S,
    pub flat: Flat,
}

pub struct Builder<S> {
    flat: Flat,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Serialize + DeserializeOwned> Builder<S> {
    pub fn new(defaults: &S) -> Self {
        let value = serde_json::to_value(defaults).expect("settings serialize to JSON");
        Self {
            flat: flatten(&value),
            _marker: std::marker::PhantomData,
        }
    }

    /// Merges a JSON object whose keys may be flat (`"train.lr"`) or nested.
    pub fn file(mut self, path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(self) };
        let file = File::open(path).map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))?;
        let value: Value = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))?;
        if !value.is_object() {
            return Err(CliError::Input(format!("config {} must be a JSON object", path.display())));
        }
        for (key, v) in flatten(&value) {
            self.set_value(&key, v)?;
        }
        Ok(self)
    }

    fn set_value(&mut self, key: &str, v: Value) -> Result<(), CliError> {
        match self.flat.get_mut(key) {
            Some(slot) => {
                *slot = v;
                Ok(())
            }
            None => Err(CliError::Usage(format!("unknown config key {key:?}"))),
        }
    }

    /// Flag override; `None` leaves the current value.
    pub fn set<V: Serialize>(mut self, key: &str, v: Option<V>) -> Result<Self, CliError> {
        if let Some(v) = v {
            let v = serde_json::to_value(v).expect("flag values serialize to JSON");
            self.set_value(key, v)?;
        }
        Ok(self)
    }

    pub fn build(self) -> Result<Resolved<S>, CliError> {
        let settings: S = serde_json::from_value(unflatten(&self.flat))
            .map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))?;
        // Round trip so the manifest shows normalized values.
        let flat = flatten(&serde_json::to_value(&settings).expect("settings serialize to JSON"));
        Ok(Resolved { settings, flat })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Inner {
        lr: f64,
        range: (f64, f64),
    }

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Outer {
        name: String,
        train: Inner,
    }

    fn defaults() -> Outer {
        Outer {
            name: "x".into(),
            train: Inner { lr: 0.1, range: (1.0, 2.0) },
        }
    }

    #[test]
    fn flatten_round_trips() {
        let v = serde_json::to_value(defaults()).unwrap();
        let flat = flatten(&v);
        assert_eq!(flat.keys().collect::<Vec<_>>(), ["name", "train.lr", "train.range"]);
        assert_eq!(unflatten(&flat), v);
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"train.lr": 0.5, "train": {"range": [3, 4]}}"#).unwrap();
        let r = Builder::new(&defaults())
            .file(Some(&path))
            .unwrap()
            .set("train.lr", Some(0.25))
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(r.settings.train, Inner { lr: 0.25, range: (3.0, 4.0) });
        assert_eq!(r.flat["train.lr"], serde_json::json!(0.25));
    }

    #[test]
    fn unknown_keys_and_bad_types_are_rejected() {
        assert!(matches!(
            Builder::new(&defaults()).set("train.momentum", Some(1)),
            Err(CliError::Usage(_))
        ));
        let r = Builder::new(&defaults()).set("train.lr", Some("fast")).unwrap().build();
        assert!(matches!(r, Err(CliError::Usage(_))));
    }
}
