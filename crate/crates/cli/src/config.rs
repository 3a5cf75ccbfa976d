//! Flat `key = value` config files. Keys mirror the long flag names; blank
//! lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::CliError;

const KNOWN_KEYS: [&str; 12] = [
    "data",
    "val-dir",
    "epochs",
    "batch",
    "lr",
    "seed",
    "augment",
    "out",
    "log",
    "checkpoint",
    "json",
    "deterministic",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config line {}: expected `key = value`",
                    i + 1
                )));
            };
            let key = key.trim().trim_start_matches("--").to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!("config line {}: unknown key `{key}`", i + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("config key `{key}` = `{v}`: {e}")))
            })
            .transpose()
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.values.get(key).map(PathBuf::from)
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.values.get(key).map(String::as_str) {
            None | Some("false" | "off" | "0") => Ok(false),
            Some("true" | "on" | "1") => Ok(true),
            Some(other) => Err(CliError::Usage(format!(
                "config key `{key}` = `{other}` is not a boolean"
            ))),
        }
    }

    /// A flag value if given, otherwise the config value.
    pub fn merge<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    pub fn merge_path(&self, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.or_else(|| self.path(key))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let cfg = ConfigFile::parse("# run\nepochs = 12\n\nlr=0.001\n--seed = 4\n").unwrap();
        assert_eq!(cfg.get::<usize>("epochs").unwrap(), Some(12));
        assert_eq!(cfg.get::<f64>("lr").unwrap(), Some(0.001));
        assert_eq!(cfg.get::<u64>("seed").unwrap(), Some(4));
        assert_eq!(cfg.get::<u64>("batch").unwrap(), None);
    }

    #[test]
    fn flags_win() {
        let cfg = ConfigFile::parse("epochs = 12").unwrap();
        assert_eq!(cfg.merge(Some(3usize), "epochs").unwrap(), Some(3));
        assert_eq!(cfg.merge(None::<usize>, "epochs").unwrap(), Some(12));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(ConfigFile::parse("colour = red"), Err(CliError::Usage(_))));
        assert!(matches!(ConfigFile::parse("epochs 3"), Err(CliError::Usage(_))));
        let cfg = ConfigFile::parse("epochs = many\njson = maybe").unwrap();
        assert!(cfg.get::<usize>("epochs").is_err());
        assert!(cfg.flag("json").is_err());
    }
}
