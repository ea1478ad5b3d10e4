//! Line-oriented `key = value` run configuration. Repeated keys form lists,
//! `#` starts a comment, blank lines are ignored.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunConfig {
    entries: BTreeMap<String, Vec<String>>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::input(format!("config line {}: expected key=value", n + 1)))?;
            let k = k.trim();
            if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::input(format!("config line {}: bad key {k:?}", n + 1)));
            }
            cfg.push(k, v.trim());
        }
        Ok(cfg)
    }

    pub fn push(&mut self, key: &str, value: &str) {
        self.entries
            .entry(key.to_string())
            .or_default()
            .push(value.to_string());
    }

    /// Replaces every value of `key`.
    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), vec![value.to_string()]);
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Single-valued key; repeating it is an error.
    pub fn get(&self, key: &str) -> Result<Option<&str>> {
        match self.entries.get(key).map(Vec::as_slice) {
            None => Ok(None),
            Some([v]) => Ok(Some(v)),
            Some(_) => Err(Error::input(format!("config key {key:?} given more than once"))),
        }
    }

    pub fn get_all(&self, key: &str) -> &[String] {
        self.entries.get(key).map_or(&[], Vec::as_slice)
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::input(format!("config key {key:?}: {e}")))
            })
            .transpose()
    }

    pub fn parsed_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn parsed_all<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        self.get_all(key)
            .iter()
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::input(format!("config key {key:?}: {e}")))
            })
            .collect()
    }

    /// Keys not in `known`, for typo reporting.
    pub fn unknown_keys(&self, known: &[&str]) -> Vec<String> {
        self.entries
            .keys()
            .filter(|k| !known.contains(&k.as_str()))
            .cloned()
            .collect()
    }

    pub fn entries(&self) -> &BTreeMap<String, Vec<String>> {
        &self.entries
    }
}

/// Canonical form: sorted keys, list values in their original order.
impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, vs) in &self.entries {
            for v in vs {
                writeln!(f, "{k}={v}")?;
            }
        }
        Ok(())
    }
}
