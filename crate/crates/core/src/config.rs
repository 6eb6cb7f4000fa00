//! `key = value` configuration files.
//!
//! One entry per line; `#` starts a comment. Keys are dotted paths such as
//! `location.1.rate`.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Result, SieveError};

#[derive(Debug, Clone, Default, PartialEq)]
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
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SieveError::Parse(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(SieveError::Parse(format!("line {}: empty key", lineno + 1)));
            }
            if entries
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(SieveError::Parse(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SieveError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.insert(key.into(), value.to_string());
    }

    /// Typed lookup; `None` when the key is absent.
    pub fn value<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| SieveError::Parse(format!("invalid value `{v}` for `{key}`"))),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Values of keys `<prefix>.<label>.<field>`, keyed by label.
    pub fn indexed<T: FromStr>(&self, prefix: &str, field: &str) -> Result<BTreeMap<u32, T>> {
        let mut out = BTreeMap::new();
        for (key, value) in &self.entries {
            let Some(rest) = key.strip_prefix(prefix).and_then(|r| r.strip_prefix('.')) else {
                continue;
            };
            let Some((label, f)) = rest.split_once('.') else {
                continue;
            };
            if f != field {
                continue;
            }
            let label: u32 = label
                .parse()
                .map_err(|_| SieveError::Parse(format!("invalid label in key `{key}`")))?;
            let v = value
                .parse()
                .map_err(|_| SieveError::Parse(format!("invalid value `{value}` for `{key}`")))?;
            out.insert(label, v);
        }
        Ok(out)
    }
}

impl std::fmt::Display for KeyValues {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_indexed_keys() {
        let kv = KeyValues::parse(
            "# growth rates\nlocation.1.rate = 0.1386294 # doubling in 5 days\nlocation.0.rate=0\n\nn = 40\n",
        )
        .unwrap();
        let rates: BTreeMap<u32, f64> = kv.indexed("location", "rate").unwrap();
        assert_eq!(rates[&0], 0.0);
        assert_eq!(rates[&1], 0.1386294);
        assert_eq!(kv.value::<usize>("n").unwrap(), Some(40));
        assert_eq!(kv.value::<usize>("missing").unwrap(), None);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(KeyValues::parse("just words").is_err());
        assert!(KeyValues::parse("a = 1\na = 2").is_err());
        assert!(KeyValues::parse("= 3").is_err());
        let kv = KeyValues::parse("n = forty").unwrap();
        assert!(kv.value::<usize>("n").is_err());
    }

    #[test]
    fn display_round_trips() {
        let kv = KeyValues::parse("b = 2\na = x:1,2").unwrap();
        assert_eq!(KeyValues::parse(&kv.to_string()).unwrap(), kv);
    }
}
