//! `key=value` configuration text: one pair per line, `#` starts a comment,
//! blank lines are ignored. Keys may appear once.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use crate::binio::open_input;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
    context: String,
}

impl KeyValues {
    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::format(context, format!("line {}: expected key=value", n + 1))
            })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::format(context, format!("line {}: empty key", n + 1)));
            }
            if entries
                .insert(k.to_string(), v.trim().to_string())
                .is_some()
            {
                return Err(Error::format(
                    context,
                    format!("line {}: duplicate key `{k}`", n + 1),
                ));
            }
        }
        Ok(Self {
            entries,
            context: context.to_string(),
        })
    }

    pub fn load(path: &Path, context: &str) -> Result<Self> {
        let mut text = String::new();
        open_input(path, context)?.read_to_string(&mut text)?;
        Self::parse(&text, context)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Parses `key` if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse::<T>().map_err(|_| {
                    Error::format(
                        self.context.as_str(),
                        format!("`{key}` has invalid value `{v}`"),
                    )
                })
            })
            .transpose()
    }

    /// Parses `key`, falling back to `default`.
    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Fails on any key outside `known`, so typos do not pass silently.
    pub fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        match self.entries.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(Error::format(
                self.context.as_str(),
                format!("unknown key `{k}`"),
            )),
            None => Ok(()),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    /// The pairs whose keys are in `keys`.
    pub fn subset(&self, keys: &[&str]) -> Self {
        self.filtered(|k| keys.contains(&k))
    }

    /// The pairs whose keys are not in `keys`.
    pub fn without(&self, keys: &[&str]) -> Self {
        self.filtered(|k| !keys.contains(&k))
    }

    fn filtered(&self, keep: impl Fn(&str) -> bool) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            context: self.context.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let kv = KeyValues::parse("# header\na = 1\n\nb=x y # note\n", "test").unwrap();
        assert_eq!(kv.get::<u32>("a").unwrap(), Some(1));
        assert_eq!(kv.raw("b"), Some("x y"));
        assert_eq!(kv.get_or("c", 2.5).unwrap(), 2.5);
    }

    #[test]
    fn errors_are_validation_errors() {
        for text in ["a", "=1", "a=1\na=2"] {
            assert!(KeyValues::parse(text, "t").unwrap_err().is_validation());
        }
        let kv = KeyValues::parse("a=x\nzz=1", "t").unwrap();
        assert!(kv.get::<u32>("a").is_err());
        assert!(kv.reject_unknown(&["a"]).is_err());
    }
}
