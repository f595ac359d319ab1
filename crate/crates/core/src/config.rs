//! Line-oriented `key = value` experiment files.
//!
//! ```text
//! # figure 5
//! scenario = two-class
//! gamma_p = 0.75
//! gamma_s = 0.05
//! lookahead = deterministic:4
//! policy = sp2:0.3
//! capacity_grid = 2, 4, 6..=20
//! ```
//!
//! Blank lines and `#` comments are ignored. `capacity_grid` items are
//! integers or inclusive ranges `a..=b`. Overrides (`key=value` strings)
//! replace file values of the same key.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::harness::{ExperimentConfig, Scenario, DEFAULT_RUNS, DEFAULT_SEED, DEFAULT_SLOTS_PER_RUN};
use crate::traffic::LookaheadModel;
use crate::twoclass::PolicyConfig;

pub const KEYS: [&str; 14] = [
    "scenario",
    "capacity_grid",
    "gamma",
    "gamma_p",
    "gamma_s",
    "lookahead",
    "alpha_prime",
    "alpha_double_prime",
    "policy",
    "slots",
    "runs",
    "warmup",
    "seed",
    "scripted_arrivals",
];

/// Where a value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override,
}

impl std::fmt::Display for Origin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Line(n) => write!(f, "line {n}"),
            Self::Override => f.write_str("override"),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{origin}: `{key}`: {message}")]
pub struct ConfigError {
    pub origin: Origin,
    pub key: String,
    pub message: String,
}

/// A missing required key has no line of its own.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error(transparent)]
    Invalid(#[from] ConfigError),
    #[error("missing required key `{key}`")]
    Missing { key: String },
    #[error("{0}")]
    Experiment(String),
}

impl ParseError {
    /// The key the error is about, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            Self::Invalid(e) => Some(&e.key),
            Self::Missing { key } => Some(key),
            Self::Experiment(_) => None,
        }
    }
}

/// Raw key/value pairs with their origin.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (Origin, String)>,
}

impl RawConfig {
    pub fn parse(source: &str) -> Result<Self, ConfigError> {
        let mut raw = Self::default();
        for (i, line) in source.lines().enumerate() {
            let origin = Origin::Line(i + 1);
            let line = line.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = split_pair(line, origin)?;
            if raw.entries.contains_key(key) {
                return Err(err(origin, key, "duplicate key"));
            }
            raw.insert(key, value, origin)?;
        }
        Ok(raw)
    }

    /// Applies one `key=value` override on top of the file values.
    pub fn apply_override(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (key, value) = split_pair(pair.trim(), Origin::Override)?;
        self.insert(key, value, Origin::Override)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        self.insert(key, &value.into(), Origin::Override)
    }

    fn insert(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(err(origin, key, "unknown key"));
        }
        self.entries.insert(key.to_string(), (origin, value.to_string()));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn lookup(&self, key: &str) -> Option<(Origin, &str)> {
        self.entries.get(key).map(|(o, v)| (*o, v.as_str()))
    }

    fn parsed<T>(
        &self,
        key: &str,
        parse: impl FnOnce(&str) -> Result<T, String>,
    ) -> Result<Option<T>, ConfigError> {
        match self.lookup(key) {
            None => Ok(None),
            Some((origin, value)) => parse(value).map(Some).map_err(|m| err(origin, key, &m)),
        }
    }

    fn required<T>(
        &self,
        key: &str,
        parse: impl FnOnce(&str) -> Result<T, String>,
    ) -> Result<T, ParseError> {
        self.parsed(key, parse)?.ok_or_else(|| ParseError::Missing { key: key.to_string() })
    }

    /// Rejects keys that the chosen scenario does not read.
    fn forbid(&self, keys: &[&str], scenario: &str) -> Result<(), ConfigError> {
        for key in keys {
            if let Some((origin, _)) = self.lookup(key) {
                return Err(err(origin, key, &format!("not used by scenario `{scenario}`")));
            }
        }
        Ok(())
    }

    pub fn into_experiment(self) -> Result<ExperimentConfig, ParseError> {
        let scenario_name = self.required("scenario", |v| Ok(v.to_string()))?;
        let scenario = match scenario_name.as_str() {
            "single" | "single-class" => {
                self.forbid(&["gamma_p", "gamma_s", "policy", "alpha_prime", "alpha_double_prime"], &scenario_name)?;
                Scenario::SingleClass {
                    gamma: self.required("gamma", real)?,
                    lookahead: self.required("lookahead", lookahead)?,
                }
            }
            "error" | "error-model" => {
                self.forbid(&["gamma_p", "gamma_s", "policy", "scripted_arrivals"], &scenario_name)?;
                Scenario::ErrorModel {
                    gamma: self.required("gamma", real)?,
                    alpha_prime: self.required("alpha_prime", real)?,
                    alpha_double_prime: self.required("alpha_double_prime", real)?,
                    lookahead: self.required("lookahead", deterministic)?,
                }
            }
            "two" | "two-class" => {
                self.forbid(&["gamma", "alpha_prime", "alpha_double_prime", "scripted_arrivals"], &scenario_name)?;
                Scenario::TwoClass {
                    gamma_p: self.required("gamma_p", real)?,
                    gamma_s: self.required("gamma_s", real)?,
                    lookahead: self.parsed("lookahead", deterministic)?.unwrap_or(0),
                    policy: self.parsed("policy", policy)?.unwrap_or(PolicyConfig::Sp1),
                }
            }
            other => {
                let (origin, _) = self.lookup("scenario").expect("scenario is present");
                return Err(err(
                    origin,
                    "scenario",
                    &format!("unknown scenario `{other}` (single, error-model, two-class)"),
                )
                .into());
            }
        };

        let scripted = self.parsed("scripted_arrivals", count_list)?;
        let mut cfg = ExperimentConfig::new(scenario, self.required("capacity_grid", capacity_grid)?);
        // A script is one fixed trace: one run over exactly its slots.
        let (default_runs, default_slots) = match &scripted {
            Some(counts) => (1, counts.len().max(1) as u64),
            None => (DEFAULT_RUNS, DEFAULT_SLOTS_PER_RUN),
        };
        cfg.runs = self.parsed("runs", positive)?.unwrap_or(default_runs);
        cfg.slots_per_run = self.parsed("slots", positive)?.unwrap_or(default_slots);
        cfg.warmup = match (self.parsed("warmup", integer)?, &scripted) {
            (Some(w), _) => Some(w),
            (None, Some(_)) => Some(0),
            (None, None) => None,
        };
        cfg.base_seed = self.parsed("seed", integer)?.unwrap_or(DEFAULT_SEED);
        cfg.scripted_arrivals = scripted;
        cfg.validate().map_err(|e| ParseError::Experiment(e.to_string()))?;
        Ok(cfg)
    }
}

fn err(origin: Origin, key: &str, message: &str) -> ConfigError {
    ConfigError { origin, key: key.to_string(), message: message.to_string() }
}

fn split_pair(line: &str, origin: Origin) -> Result<(&str, &str), ConfigError> {
    let (key, value) = line
        .split_once('=')
        .ok_or_else(|| err(origin, line, "expected `key = value`"))?;
    let (key, value) = (key.trim(), value.trim());
    if key.is_empty() {
        return Err(err(origin, key, "empty key"));
    }
    if value.is_empty() {
        return Err(err(origin, key, "empty value"));
    }
    Ok((key, value))
}

fn real(v: &str) -> Result<f64, String> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("expected a number, got `{v}`"))
}

fn integer(v: &str) -> Result<u64, String> {
    v.parse::<u64>().map_err(|_| format!("expected a nonnegative integer, got `{v}`"))
}

fn positive(v: &str) -> Result<u64, String> {
    match integer(v)? {
        0 => Err("must be at least 1".into()),
        n => Ok(n),
    }
}

fn lookahead(v: &str) -> Result<LookaheadModel, String> {
    v.parse::<LookaheadModel>().map_err(|e| e.to_string())
}

/// A fixed horizon, as `deterministic:T` or a bare integer.
fn deterministic(v: &str) -> Result<u32, String> {
    match v.parse::<u32>() {
        Ok(t) => Ok(t),
        Err(_) => match lookahead(v)? {
            LookaheadModel::Deterministic(t) => Ok(t),
            other => Err(format!("this scenario needs a deterministic lookahead, got `{other}`")),
        },
    }
}

fn policy(v: &str) -> Result<PolicyConfig, String> {
    v.parse::<PolicyConfig>().map_err(|e| e.to_string())
}

fn count_list(v: &str) -> Result<Vec<u64>, String> {
    v.split(',').map(|item| integer(item.trim())).collect()
}

fn capacity_grid(v: &str) -> Result<Vec<u64>, String> {
    let mut grid = Vec::new();
    for item in v.split(',').map(str::trim) {
        match item.split_once("..=") {
            Some((lo, hi)) => {
                let (lo, hi) = (positive(lo.trim())?, positive(hi.trim())?);
                if lo > hi {
                    return Err(format!("empty range `{item}`"));
                }
                grid.extend(lo..=hi);
            }
            None => grid.push(positive(item)?),
        }
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err("capacities must be strictly increasing".into());
    }
    Ok(grid)
}

/// Parses a configuration file into a validated experiment.
pub fn parse_config(source: &str) -> Result<ExperimentConfig, ParseError> {
    RawConfig::parse(source)?.into_experiment()
}
