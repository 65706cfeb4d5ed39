//! Flat `key = value` configuration text.
//!
//! One assignment per line. `#` starts a comment anywhere on a line, blank
//! lines are ignored, and a key may appear only once.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    /// 1-based source line; 0 for entries that did not come from a file.
    pub line: usize,
    pub key: String,
    pub value: String,
}

impl Entry {
    pub fn new(key: impl Into<String>, value: impl Into<String>) -> Self {
        Entry {
            line: 0,
            key: key.into(),
            value: value.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    MissingEquals { line: usize },
    #[error("line {line}: invalid key `{key}`")]
    BadKey { line: usize, key: String },
    #[error("line {line}: empty value for `{key}`")]
    EmptyValue { line: usize, key: String },
    #[error("line {line}: `{key}` already set on line {first}")]
    Duplicate {
        line: usize,
        first: usize,
        key: String,
    },
    #[error("{}unknown key `{key}`", at(*line))]
    UnknownKey { line: usize, key: String },
    #[error("{}bad value `{value}` for `{key}`: {reason}", at(*line))]
    BadValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
}

fn at(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!("line {line}: ")
    }
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        && key.starts_with(|c: char| c.is_ascii_lowercase())
}

pub fn parse_config(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut entries: Vec<Entry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or(ConfigError::MissingEquals { line })?;
        let (key, value) = (key.trim(), value.trim());
        if !valid_key(key) {
            return Err(ConfigError::BadKey {
                line,
                key: key.to_string(),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::EmptyValue {
                line,
                key: key.to_string(),
            });
        }
        if let Some(prev) = entries.iter().find(|e| e.key == key) {
            return Err(ConfigError::Duplicate {
                line,
                first: prev.line,
                key: key.to_string(),
            });
        }
        entries.push(Entry {
            line,
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(entries)
}

/// Renders entries back to config text, one per line.
pub fn render_config<'a>(entries: impl IntoIterator<Item = &'a Entry>) -> String {
    entries
        .into_iter()
        .map(|e| format!("{} = {}\n", e.key, e.value))
        .collect()
}
