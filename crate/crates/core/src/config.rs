//! Flat `key = value` configuration files.
//!
//! One pair per line; `#` starts a comment; blank lines are ignored. Later
//! assignments override earlier ones.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            entries.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.insert(key.into(), value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Parsed value, `None` if the key is absent.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::Config(format!("key `{key}` = `{v}`: {e}")))
            })
            .transpose()
    }

    /// Overwrite `slot` when the key is present.
    pub fn apply<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<()>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Fails on the first key outside `known`.
    pub fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        match self.keys().find(|k| !known.contains(k)) {
            Some(k) => Err(Error::Config(format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }

    /// `self` overridden by `other`.
    pub fn merged(&self, other: &Self) -> Self {
        let mut entries = self.entries.clone();
        entries.extend(other.entries.clone());
        Self { entries }
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_overrides() {
        let kv = KeyValues::parse("# header\nlambda = 5\n\nepochs=10 # trailing\nlambda = 2.5\n").unwrap();
        assert_eq!(kv.get::<f64>("lambda").unwrap(), Some(2.5));
        assert_eq!(kv.get::<usize>("epochs").unwrap(), Some(10));
        assert_eq!(kv.get::<usize>("missing").unwrap(), None);
    }

    #[test]
    fn reports_bad_lines_and_values() {
        assert!(KeyValues::parse("no equals sign").is_err());
        assert!(KeyValues::parse(" = 3").is_err());
        let kv = KeyValues::parse("epochs = many").unwrap();
        assert!(kv.get::<usize>("epochs").is_err());
    }

    #[test]
    fn text_round_trip_and_merge() {
        let mut a = KeyValues::parse("a = 1\nb = 2").unwrap();
        let b = KeyValues::parse("b = 3").unwrap();
        assert_eq!(KeyValues::parse(&a.to_text()).unwrap(), a);
        a = a.merged(&b);
        assert_eq!(a.raw("b"), Some("3"));
        assert!(a.reject_unknown(&["a"]).is_err());
        assert!(a.reject_unknown(&["a", "b"]).is_ok());
    }
}
