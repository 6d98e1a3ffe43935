//! Optional `key = value` settings file. Command-line flags take precedence.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

pub const KEYS: &[&str] = &["csit", "seed", "trials", "K", "P", "D", "format", "dump", "out", "kinds"];

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    /// Blank lines and `#` comments are ignored; keys must be known.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key = value", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(format!("config line {}: unknown key {key:?}", lineno + 1));
            }
            values.insert(key.to_string(), value.to_string());
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| format!("config key {key}: cannot parse {v:?}")))
            .transpose()
    }
}
