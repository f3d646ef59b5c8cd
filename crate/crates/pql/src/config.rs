//! `key=value` configuration with environment overrides.
//!
//! Lines are `key = value`; blank lines and lines starting with `#` are
//! ignored. Every key can be overridden by an environment variable named
//! `PQL_` followed by the key in upper case with dots replaced by
//! underscores, e.g. `PQL_STORE_PATH` or `PQL_LABELSIMILARITY_DEFAULTTHRESHOLD`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::labels::check_threshold;

pub const ENV_PREFIX: &str = "PQL_";

pub const KEYS: &[&str] = &[
    "store.path",
    "labelSimilarity.defaultThreshold",
    "labelSimilarity.indexedThresholds",
    "numberOfQueryThreads",
    "bot.sleepSeconds",
    "bot.maxIndexSeconds",
    "stateBudget",
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("invalid value {value:?} for {key}: {reason}")]
    Value {
        key: String,
        value: String,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub store_path: PathBuf,
    /// Threshold used for `~"label"` tasks.
    pub default_threshold: f64,
    pub indexed_thresholds: Vec<f64>,
    pub query_threads: usize,
    pub bot_sleep_seconds: f64,
    pub max_index_seconds: f64,
    pub state_budget: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            store_path: PathBuf::from("pql-store"),
            default_threshold: 0.75,
            indexed_thresholds: vec![0.75, 1.0],
            query_threads: 1,
            bot_sleep_seconds: 5.0,
            max_index_seconds: 60.0,
            state_budget: crate::statespace::DEFAULT_STATE_BUDGET,
        }
    }
}

fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.to_uppercase().replace('.', "_"))
}

impl Config {
    /// Reads `path` when given, then applies overrides from the process environment.
    pub fn load(path: Option<&Path>) -> Result<Config, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.to_path_buf(),
                source,
            })?,
            None => String::new(),
        };
        Self::from_sources(&text, |k| std::env::var(k).ok())
    }

    /// Parses `text` and applies overrides looked up through `env`.
    pub fn from_sources(
        text: &str,
        env: impl Fn(&str) -> Option<String>,
    ) -> Result<Config, ConfigError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: n + 1 })?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(ConfigError::UnknownKey(k.to_string()));
            }
            values.insert(k.to_string(), v.trim().to_string());
        }
        for key in KEYS {
            if let Some(v) = env(&env_name(key)) {
                values.insert(key.to_string(), v);
            }
        }
        let mut cfg = Config::default();
        for (k, v) in &values {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |reason: &str| ConfigError::Value {
            key: key.into(),
            value: value.into(),
            reason: reason.into(),
        };
        let threshold = |s: &str| -> Result<f64, ConfigError> {
            let t: f64 = s.trim().parse().map_err(|_| bad("not a number"))?;
            check_threshold(t).map_err(|_| bad("must lie in [0, 1]"))?;
            Ok(t)
        };
        let seconds = |s: &str| -> Result<f64, ConfigError> {
            let t: f64 = s.parse().map_err(|_| bad("not a number"))?;
            if t.is_finite() && t >= 0.0 {
                Ok(t)
            } else {
                Err(bad("must be a non-negative number"))
            }
        };
        match key {
            "store.path" => self.store_path = PathBuf::from(value),
            "labelSimilarity.defaultThreshold" => self.default_threshold = threshold(value)?,
            "labelSimilarity.indexedThresholds" => {
                let mut ts = value
                    .split(',')
                    .map(threshold)
                    .collect::<Result<Vec<_>, _>>()?;
                ts.sort_by(f64::total_cmp);
                ts.dedup();
                self.indexed_thresholds = ts;
            }
            "numberOfQueryThreads" => {
                self.query_threads = value
                    .parse()
                    .ok()
                    .filter(|&n: &usize| n >= 1)
                    .ok_or_else(|| bad("must be ≥ 1"))?
            }
            "bot.sleepSeconds" => self.bot_sleep_seconds = seconds(value)?,
            "bot.maxIndexSeconds" => self.max_index_seconds = seconds(value)?,
            "stateBudget" => {
                self.state_budget = value
                    .parse()
                    .ok()
                    .filter(|&n: &usize| n >= 1)
                    .ok_or_else(|| bad("must be ≥ 1"))?
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// The configuration in file syntax, one key per line.
    pub fn render(&self) -> String {
        let ts: Vec<String> = self
            .indexed_thresholds
            .iter()
            .map(|t| t.to_string())
            .collect();
        format!(
            "store.path={}\nlabelSimilarity.defaultThreshold={}\nlabelSimilarity.indexedThresholds={}\n\
             numberOfQueryThreads={}\nbot.sleepSeconds={}\nbot.maxIndexSeconds={}\nstateBudget={}\n",
            self.store_path.display(),
            self.default_threshold,
            ts.join(","),
            self.query_threads,
            self.bot_sleep_seconds,
            self.max_index_seconds,
            self.state_budget
        )
    }
}
