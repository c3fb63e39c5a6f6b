//! Flat `key=value` settings with environment overrides.
//!
//! Precedence, lowest first: config file, `ZITI_*` environment variables,
//! command line flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Keys accepted in config files and as `ZITI_<KEY>` variables.
pub const KEYS: &[&str] = &[
    "a",
    "b",
    "n",
    "nr",
    "ntheta",
    "rule",
    "strategy",
    "integrand",
    "integrands",
    "stencil",
    "second_order",
    "periodic_theta",
    "problem",
    "sizes",
    "mu",
    "tf",
    "d",
    "sign",
    "snapshot_every",
    "csv",
    "dump_field",
    "tol_int",
    "gram",
    "seed",
    "deterministic",
    "f",
];

#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

impl Settings {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Validation(format!("{origin}:{}: expected key=value", lineno + 1))
            })?;
            let key = normalize(k);
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Validation(format!(
                    "{origin}:{}: unknown key '{key}'",
                    lineno + 1
                )));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Overlays `ZITI_<KEY>` variables from `vars`.
    pub fn overlay_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) {
        for (name, value) in vars {
            if let Some(rest) = name.strip_prefix("ZITI_") {
                let key = normalize(rest);
                if KEYS.contains(&key.as_str()) {
                    self.values.insert(key, value);
                }
            }
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Command line value if given, otherwise the setting, otherwise `None`.
    pub fn opt<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|e| CliError::Validation(format!("setting '{key}' = '{s}': {e}"))),
        }
    }

    pub fn get<T: FromStr>(&self, cli: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.opt(cli, key)?.unwrap_or(default))
    }

    /// A set flag wins; otherwise the setting is read as a boolean.
    pub fn flag(&self, cli: bool, key: &str) -> Result<bool, CliError> {
        if cli {
            return Ok(true);
        }
        match self.raw(key) {
            None => Ok(false),
            Some(s) => match s.to_ascii_lowercase().as_str() {
                "1" | "true" | "yes" | "on" => Ok(true),
                "0" | "false" | "no" | "off" | "" => Ok(false),
                _ => Err(CliError::Validation(format!("setting '{key}' = '{s}' is not a boolean"))),
            },
        }
    }
}

/// Comma separated list of grid sizes.
pub fn parse_sizes(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| CliError::Validation(format!("bad grid size '{t}'")))
        })
        .collect()
}
