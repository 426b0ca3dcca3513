//! Flat key = value configuration files. Keys mirror the long flag names of
//! the subcommand they configure; an explicit flag always beats the file and
//! the file beats the built-in default.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug)]
pub enum ConfigError {
    Io { path: String, source: std::io::Error },
    Parse { path: String, line: usize, reason: String },
    UnknownKey { path: String, line: usize, key: String },
    BadValue { key: String, value: String, reason: String },
    MissingKey { key: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, source } => write!(f, "cannot read {path}: {source}"),
            ConfigError::Parse { path, line, reason } => {
                write!(f, "{path}:{line}: {reason}")
            }
            ConfigError::UnknownKey { path, line, key } => {
                write!(f, "{path}:{line}: unknown key `{key}`")
            }
            ConfigError::BadValue { key, value, reason } => {
                write!(f, "bad value `{value}` for `{key}`: {reason}")
            }
            ConfigError::MissingKey { key } => {
                write!(f, "missing required `--{key}` (flag or config)")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// Key-value pairs from one file, keys normalized to lowercase hyphenated
/// form. Later duplicates override earlier ones with a warning on stderr.
#[derive(Debug, Default, Clone)]
pub struct ConfigMap {
    values: BTreeMap<String, String>,
}

pub fn normalize_key(raw: &str) -> String {
    raw.trim().to_ascii_lowercase().replace('_', "-")
}

pub fn load_config(path: &Path, allowed: &[&str]) -> Result<ConfigMap, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text, &path.display().to_string(), allowed)
}

pub fn parse_config(text: &str, origin: &str, allowed: &[&str]) -> Result<ConfigMap, ConfigError> {
    let mut values = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((raw_key, raw_value)) = line.split_once('=') else {
            return Err(ConfigError::Parse {
                path: origin.to_string(),
                line: line_no,
                reason: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = normalize_key(raw_key);
        let value = raw_value.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError::Parse {
                path: origin.to_string(),
                line: line_no,
                reason: "empty key".into(),
            });
        }
        if !allowed.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { path: origin.to_string(), line: line_no, key });
        }
        if values.insert(key.clone(), value).is_some() {
            eprintln!("warning: {origin}:{line_no}: duplicate key `{key}`, last value wins");
        }
    }
    Ok(ConfigMap { values })
}

impl ConfigMap {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| ConfigError::BadValue {
                key: key.to_string(),
                value: v.clone(),
                reason: e.to_string(),
            }),
        }
    }
}

/// Flag beats file beats default.
pub fn resolve<T: FromStr + Clone>(
    flag: Option<T>,
    cfg: &ConfigMap,
    key: &str,
    default: T,
) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    match flag {
        Some(v) => Ok(v),
        None => Ok(cfg.parsed::<T>(key)?.unwrap_or(default)),
    }
}

/// Like resolve but with no default: the value must come from somewhere.
pub fn resolve_required<T: FromStr + Clone>(
    flag: Option<T>,
    cfg: &ConfigMap,
    key: &str,
) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    match flag {
        Some(v) => Ok(v),
        None => cfg
            .parsed::<T>(key)?
            .ok_or_else(|| ConfigError::MissingKey { key: key.to_string() }),
    }
}
