//! Plain-text `key=value` run manifests.
//!
//! Rendered as `# key=value` header lines in every output file so that a run
//! can be reproduced from its artifact alone.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `key`, replacing an earlier value in place.
    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        let key = key.into();
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key, value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Input(format!("manifest is missing '{key}'")))
    }

    pub fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| Error::Input(format!("manifest value {key}={raw} is malformed")))
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn extend(&mut self, other: &Manifest) {
        for (k, v) in &other.entries {
            self.set(k.clone(), v);
        }
    }

    /// Reads the leading `#` lines of `text`; other lines are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut manifest = Manifest::new();
        for line in text.lines() {
            let Some(body) = line.strip_prefix('#') else {
                continue;
            };
            let body = body.trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("malformed manifest line '{line}'")))?;
            manifest.set(k.trim(), v.trim());
        }
        Ok(manifest)
    }
}

impl fmt::Display for Manifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "# {k}={v}")?;
        }
        Ok(())
    }
}
