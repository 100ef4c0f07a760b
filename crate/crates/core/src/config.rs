//! `key = value` configuration files.
//!
//! One entry per line; `#` starts a comment; blank lines are ignored. Keys
//! may appear once. Callers declare which keys they accept so typos fail
//! loudly instead of silently falling back to defaults.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("missing key {0:?}")]
    Missing(String),
    #[error("key {key:?}: {msg}")]
    Invalid { key: String, msg: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                msg: format!("expected `key = value`, got {line:?}"),
            })?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    msg: format!("invalid key {key:?}"),
                });
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    msg: format!("duplicate key {key:?}"),
                });
            }
        }
        Ok(Self { entries })
    }

    /// Overrides (or adds) one entry.
    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    /// Fails on the first key not in `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        match self.entries.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(ConfigError::UnknownKey(k.clone())),
            None => Ok(()),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>().map_err(|e| ConfigError::Invalid {
                    key: key.to_string(),
                    msg: e.to_string(),
                })
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?.ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    /// Comma- or whitespace-separated list of numbers.
    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.raw(key).map(|v| parse_list(key, v)).transpose()
    }

    /// Matrix with rows separated by `;`.
    pub fn matrix(&self, key: &str) -> Result<Option<Vec<Vec<f64>>>, ConfigError> {
        self.raw(key)
            .map(|v| v.split(';').map(|row| parse_list(key, row)).collect())
            .transpose()
    }
}

fn parse_list(key: &str, text: &str) -> Result<Vec<f64>, ConfigError> {
    let out = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>().map_err(|e| ConfigError::Invalid {
                key: key.to_string(),
                msg: format!("{s:?}: {e}"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if out.is_empty() {
        return Err(ConfigError::Invalid {
            key: key.to_string(),
            msg: "empty list".into(),
        });
    }
    Ok(out)
}
