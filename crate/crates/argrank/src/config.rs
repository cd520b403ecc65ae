//! Run configuration: a flat `key = value` file overlaid by command-line
//! flags, with relative input paths optionally resolved against a data root.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::{Error, Result, TOOL_VERSION};

/// Environment variable naming the directory relative input paths resolve
/// against. Output directories are never resolved against it.
pub const DATA_ROOT_VAR: &str = "ARGRANK_DATA_ROOT";

pub const RUN_CONFIG_FILE: &str = "run_config.txt";

/// Parses `key = value` lines. `#` starts a comment line; keys may use `-`
/// or `_`. Values are taken verbatim after trimming.
pub fn parse_config_file(text: &str, source: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(source, i + 1, format!("expected `key = value`, got `{line}`")))?;
        let key = normalize_key(key.trim());
        if key.is_empty() {
            return Err(Error::parse(source, i + 1, "empty key"));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::parse(source, i + 1, format!("duplicate key `{key}`")));
        }
    }
    Ok(out)
}

pub fn normalize_key(key: &str) -> String {
    key.replace('-', "_")
}

/// Effective settings of one subcommand invocation.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    pub command: String,
    values: BTreeMap<String, String>,
    data_root: Option<PathBuf>,
}

impl Settings {
    /// Flags win over file values. Keys outside `known` are usage errors, so
    /// a misspelled key in the file fails loudly.
    pub fn new(
        command: &str,
        file: BTreeMap<String, String>,
        flags: BTreeMap<String, String>,
        known: &[&str],
        data_root: Option<PathBuf>,
    ) -> Result<Self> {
        for key in file.keys().chain(flags.keys()) {
            if !known.contains(&key.as_str()) {
                return Err(Error::Usage(format!("unknown setting `{key}` for `{command}`")));
            }
        }
        let mut values = file;
        values.extend(flags);
        Ok(Settings {
            command: command.to_string(),
            values,
            data_root,
        })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Usage(format!("`{}` requires --{}", self.command, key.replace('_', "-"))))
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Usage(format!("invalid value `{v}` for `{key}`")))
            })
            .transpose()
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn resolve(&self, value: &str) -> PathBuf {
        let p = PathBuf::from(value);
        match &self.data_root {
            Some(root) if p.is_relative() => root.join(p),
            _ => p,
        }
    }

    /// An input path that must exist.
    pub fn input(&self, key: &str) -> Result<PathBuf> {
        let path = self.resolve(self.require(key)?);
        check_exists(&path)?;
        Ok(path)
    }

    pub fn optional_input(&self, key: &str) -> Result<Option<PathBuf>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => {
                let path = self.resolve(v);
                check_exists(&path)?;
                Ok(Some(path))
            }
        }
    }

    /// The output directory, created if absent.
    pub fn output_dir(&self) -> Result<PathBuf> {
        let path = PathBuf::from(self.require("out")?);
        std::fs::create_dir_all(&path).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// The serialized run configuration: tool version, subcommand, data
    /// root, then every effective setting in key order.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        writeln!(out, "tool_version = {TOOL_VERSION}").unwrap();
        writeln!(out, "command = {}", self.command).unwrap();
        if let Some(root) = &self.data_root {
            writeln!(out, "data_root = {}", root.display()).unwrap();
        }
        for (k, v) in &self.values {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }

    pub fn write_run_config(&self, dir: &Path) -> Result<()> {
        crate::formats::write_file(&dir.join(RUN_CONFIG_FILE), self.serialize())
    }
}

fn check_exists(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ));
    }
    Ok(())
}
