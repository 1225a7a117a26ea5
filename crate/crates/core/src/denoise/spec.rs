use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// `key=value` options of a denoiser spec. Each getter consumes its key;
/// [`SpecOptions::finish`] rejects whatever is left.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpecOptions {
    name: String,
    values: BTreeMap<String, String>,
}

impl SpecOptions {
    fn parse<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.values.remove(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::invalid(format!("{}: `{key}={v}` is not a valid value", self.name))),
        }
    }

    pub fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        self.parse(key, default)
    }

    pub fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        self.parse(key, default)
    }

    pub fn required(&mut self, key: &str) -> Result<String> {
        self.values
            .remove(key)
            .ok_or_else(|| Error::invalid(format!("{} needs `{key}=…`", self.name)))
    }

    pub fn finish(self) -> Result<()> {
        match self.values.keys().next() {
            None => Ok(()),
            Some(k) => Err(Error::invalid(format!("{}: unknown option `{k}`", self.name))),
        }
    }
}

/// Split `name[:key=value[,key=value]…]`.
pub fn parse_spec(spec: &str) -> Result<(String, SpecOptions)> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let name = name.trim();
    if name.is_empty() {
        return Err(Error::invalid(format!("denoiser spec `{spec}` has no name")));
    }
    let mut values = BTreeMap::new();
    for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("option `{item}` in `{spec}` is not key=value")))?;
        if values.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Error::invalid(format!("option `{}` repeated in `{spec}`", k.trim())));
        }
    }
    Ok((
        name.to_string(),
        SpecOptions {
            name: name.to_string(),
            values,
        },
    ))
}
