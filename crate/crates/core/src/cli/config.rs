//! Flat `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Keys not listed in [`KEYS`] are rejected. Command-line flags are applied
//! after the file through the same setter, so they take precedence.

use std::fmt;
use std::path::Path;

use crate::engine::SimulationConfig;
use crate::graph::TopologyKind;
use crate::model::{MarketMode, NewItemLiking, SocialBlend};
use crate::sweep::Objective;

/// Every recognized key, in the order they are written to manifests.
pub const KEYS: &[&str] = &[
    "agents",
    "items",
    "rounds",
    "seed",
    "mode",
    "topology",
    "k",
    "p",
    "gamma",
    "beta",
    "sigmoid_center",
    "intro_period",
    "intro_batch",
    "utility_blend",
    "new_item_liking",
    "penalty",
    "min_utility",
    "intro_ads",
    "catalog_ads",
    "tracked_ad",
    "runs",
    "grid",
    "objective",
];

fn canonical_key(key: &str) -> Option<&'static str> {
    let key = match key {
        "n" | "n_agents" => "agents",
        "m" | "m_initial" => "items",
        other => other,
    };
    KEYS.iter().copied().find(|k| *k == key)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
    pub line: Option<usize>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}: {}", self.key, self.reason),
            None => write!(f, "{}: {}", self.key, self.reason),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        reason: reason.into(),
        line: None,
    }
}

/// A simulation config plus the experiment-level settings around it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sim: SimulationConfig,
    pub runs: usize,
    /// `None` means the subcommand's default grid.
    pub grid: Option<Vec<f64>>,
    pub objective: Objective,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            sim: SimulationConfig::default(),
            runs: 100,
            grid: None,
            objective: Objective::FinalShare,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| err(key, format!("cannot parse '{value}': {e}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|v| parse_num::<f64>(key, v.trim()))
        .collect()
}

fn parse_keyword<T: std::str::FromStr<Err = String>>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse::<T>().map_err(|e| err(key, e))
}

fn parse_switch(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "on" | "true" | "yes" => Ok(true),
        "off" | "false" | "no" => Ok(false),
        other => Err(err(key, format!("expected on|off, got '{other}'"))),
    }
}

fn parse_optional(key: &str, value: &str) -> Result<Option<f64>, ConfigError> {
    match value {
        "none" | "" => Ok(None),
        v => parse_num(key, v).map(Some),
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Assigns one key. Domain checks happen in [`ExperimentConfig::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = canonical_key(key).ok_or_else(|| err(key, "unknown key"))?;
        let v = value.trim();
        let sim = &mut self.sim;
        match key {
            "agents" => sim.n_agents = parse_num(key, v)?,
            "items" => sim.m_initial = parse_num(key, v)?,
            "rounds" => sim.rounds = parse_num(key, v)?,
            "seed" => sim.seed = parse_num(key, v)?,
            "mode" => sim.params.mode = parse_keyword::<MarketMode>(key, v)?,
            "topology" => sim.topology.kind = parse_keyword::<TopologyKind>(key, v)?,
            "k" => sim.topology.k = parse_num(key, v)?,
            "p" => sim.topology.p = parse_num(key, v)?,
            "gamma" => sim.params.gamma = parse_num(key, v)?,
            "beta" => sim.params.beta = parse_num(key, v)?,
            "sigmoid_center" => sim.params.sigmoid_center = parse_num(key, v)?,
            "intro_period" => sim.params.intro_period = parse_num(key, v)?,
            "intro_batch" => sim.params.intro_batch = parse_num(key, v)?,
            "utility_blend" => sim.params.utility_social_blend = parse_keyword::<SocialBlend>(key, v)?,
            "new_item_liking" => sim.params.new_item_liking = parse_keyword::<NewItemLiking>(key, v)?,
            "penalty" => sim.params.penalty_enabled = parse_switch(key, v)?,
            "min_utility" => sim.params.min_utility = parse_optional(key, v)?,
            "intro_ads" => sim.intro_ads = parse_list(key, v)?,
            "catalog_ads" => sim.catalog_ads = parse_num(key, v)?,
            "tracked_ad" => sim.tracked_ad = parse_optional(key, v)?,
            "runs" => self.runs = parse_num(key, v)?,
            "grid" => self.grid = Some(parse_list(key, v)?),
            "objective" => self.objective = parse_keyword::<Objective>(key, v)?,
            _ => unreachable!("every canonical key is handled"),
        }
        Ok(())
    }

    /// Applies the assignments of a config file's text.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at_line = |mut e: ConfigError| {
                e.line = Some(idx + 1);
                e
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at_line(err(line, "expected 'key = value'")))?;
            self.set(key.trim(), value).map_err(at_line)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err("config", format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sim.validate().map_err(|e| match e {
            crate::Error::Domain { name, reason } => err(name, reason),
            other => err("config", other.to_string()),
        })?;
        if self.runs == 0 {
            return Err(err("runs", "must be at least 1"));
        }
        if let Some(grid) = &self.grid {
            if grid.is_empty() {
                return Err(err("grid", "needs at least one value"));
            }
            if grid.iter().any(|v| !v.is_finite()) {
                return Err(err("grid", "values must be finite"));
            }
        }
        Ok(())
    }

    /// Every key with its resolved value, in [`KEYS`] order. Feeding the
    /// pairs back through [`ExperimentConfig::set`] reproduces `self`.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let sim = &self.sim;
        let p = &sim.params;
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| x.to_string());
        KEYS.iter()
            .map(|&k| {
                let v = match k {
                    "agents" => sim.n_agents.to_string(),
                    "items" => sim.m_initial.to_string(),
                    "rounds" => sim.rounds.to_string(),
                    "seed" => sim.seed.to_string(),
                    "mode" => p.mode.as_str().to_string(),
                    "topology" => sim.topology.kind.as_str().to_string(),
                    "k" => sim.topology.k.to_string(),
                    "p" => sim.topology.p.to_string(),
                    "gamma" => p.gamma.to_string(),
                    "beta" => p.beta.to_string(),
                    "sigmoid_center" => p.sigmoid_center.to_string(),
                    "intro_period" => p.intro_period.to_string(),
                    "intro_batch" => p.intro_batch.to_string(),
                    "utility_blend" => p.utility_social_blend.as_str().to_string(),
                    "new_item_liking" => p.new_item_liking.as_str().to_string(),
                    "penalty" => if p.penalty_enabled { "on" } else { "off" }.to_string(),
                    "min_utility" => opt(p.min_utility),
                    "intro_ads" => join(&sim.intro_ads),
                    "catalog_ads" => sim.catalog_ads.to_string(),
                    "tracked_ad" => opt(sim.tracked_ad),
                    "runs" => self.runs.to_string(),
                    "grid" => self.grid.as_deref().map_or_else(|| "none".to_string(), join),
                    "objective" => self.objective.as_str().to_string(),
                    _ => unreachable!(),
                };
                (k, v)
            })
            .filter(|(k, v)| !(*k == "grid" && v == "none"))
            .collect()
    }

    /// Text form of [`ExperimentConfig::to_pairs`], readable by
    /// [`ExperimentConfig::apply_text`].
    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
