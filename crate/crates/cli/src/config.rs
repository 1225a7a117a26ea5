//! Layered settings: built-in defaults, then a JSON file, then flags.

use std::path::Path;

use msemg::fsutil::{read_json, write_json};
use msemg::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// Recursively overlay `top` onto `base`; objects merge key by key.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Flag values that were actually given, as a JSON object.
#[derive(Default)]
pub struct Overrides(Map<String, Value>);

impl Overrides {
    pub fn set(&mut self, key: &str, v: Option<impl Serialize>) -> &mut Self {
        if let Some(v) = v {
            let mut cur = &mut self.0;
            let mut parts: Vec<&str> = key.split('.').collect();
            let last = parts.pop().expect("non-empty key");
            for p in parts {
                cur = cur
                    .entry(p)
                    .or_insert_with(|| Value::Object(Map::new()))
                    .as_object_mut()
                    .expect("nested key");
            }
            cur.insert(last.to_string(), serde_json::to_value(v).expect("flag values serialize"));
        }
        self
    }
}

/// Defaults, overlaid by `file` (if any), overlaid by `flags`. Unknown keys
/// in the file are rejected by the target type.
pub fn resolve<S: Serialize + DeserializeOwned + Default>(file: Option<&Path>, flags: Overrides) -> Result<S> {
    let mut v = serde_json::to_value(S::default())?;
    if let Some(path) = file {
        let from_file: Value = read_json(path)?;
        if !from_file.is_object() {
            return Err(Error::InvalidParameter(format!("{} must hold a JSON object", path.display())));
        }
        merge(&mut v, from_file);
    }
    merge(&mut v, Value::Object(flags.0));
    serde_json::from_value(v).map_err(|e| Error::InvalidParameter(format!("configuration: {e}")))
}

#[derive(Serialize)]
struct Snapshot<'a, S> {
    command: &'a str,
    settings: &'a S,
}

/// Record the settings a run actually used next to its outputs.
pub fn write_snapshot<S: Serialize>(out_dir: &Path, command: &str, settings: &S) -> Result<()> {
    write_json(&out_dir.join("resolved_config.json"), &Snapshot { command, settings })
}
