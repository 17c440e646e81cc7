//! Flat `key = value` configuration.
//!
//! Top-level keys set grid axes (comma-separated lists) and settings shared by
//! every scenario. A `[label]` section overrides scalar settings for the one
//! scenario with that label. `#` starts a comment.
//!
//! ```text
//! runs = 200
//! lambda = 0.33, 1
//! seed = 7
//!
//! [negative-modular-utility-individual]
//! noise_sd = 0.05
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use orgsim::experiments::{build_grid, GridSpec, ScenarioGrid, VarianceModel};
use orgsim::landscape::PatternKind;
use orgsim::simulation::{Mode, ScenarioConfig};
use orgsim::{Error, Result};

/// Keys that span grid axes and may only appear at top level.
const AXES: [&str; 5] = ["rho", "pattern", "mode", "gamma", "lambda"];
/// Keys that describe the invocation rather than a scenario.
const RUN_KEYS: [&str; 3] = ["workers", "out", "variance"];
const SCENARIO_KEYS: [&str; 16] = [
    "n_tasks", "n_agents", "capacity", "realloc_interval", "shock_period", "horizon", "runs", "seed",
    "belief_update", "search", "realloc_position", "bottom_up_start", "shock", "noise_sd",
    "recovery_short", "recovery_long",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub top: BTreeMap<String, String>,
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

fn config_error(msg: String) -> Error {
    Error::Config(msg)
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        let mut section: Option<String> = None;
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let label = rest
                    .strip_suffix(']')
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .ok_or_else(|| config_error(format!("line {line_no}: malformed section header `{line}`")))?;
                if raw.sections.contains_key(label) {
                    return Err(config_error(format!("line {line_no}: section [{label}] appears twice")));
                }
                raw.sections.insert(label.to_string(), BTreeMap::new());
                section = Some(label.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| config_error(format!("line {line_no}: expected `key = value`, got `{line}`")))?;
            let target = match &section {
                None => {
                    if !AXES.contains(&key) && !RUN_KEYS.contains(&key) && !SCENARIO_KEYS.contains(&key) {
                        return Err(config_error(format!("line {line_no}: unknown key `{key}`")));
                    }
                    &mut raw.top
                }
                Some(label) => {
                    if !SCENARIO_KEYS.contains(&key) {
                        return Err(config_error(format!(
                            "line {line_no}: key `{key}` cannot be set in scenario section [{label}]"
                        )));
                    }
                    raw.sections.get_mut(label).expect("section inserted")
                }
            };
            if target.insert(key.to_string(), value.to_string()).is_some() {
                return Err(config_error(format!("line {line_no}: key `{key}` set twice")));
            }
        }
        Ok(raw)
    }

    /// Applies a top-level `key=value` override from the command line.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| config_error(format!("expected KEY=VALUE, got `{assignment}`")))?;
        let key = key.trim();
        if !AXES.contains(&key) && !RUN_KEYS.contains(&key) && !SCENARIO_KEYS.contains(&key) {
            return Err(config_error(format!("unknown key `{key}`")));
        }
        self.top.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| config_error(format!("`{key} = {value}`: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse_value(key, v))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(config_error(format!("`{key} = {value}`: expected true or false"))),
    }
}

fn apply_scalar(cfg: &mut ScenarioConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "n_tasks" => cfg.n_tasks = parse_value(key, value)?,
        "n_agents" => cfg.n_agents = parse_value(key, value)?,
        "capacity" => cfg.capacity = parse_value(key, value)?,
        "realloc_interval" => cfg.realloc_interval = parse_value(key, value)?,
        "shock_period" => cfg.shock_period = parse_value(key, value)?,
        "horizon" => cfg.horizon = parse_value(key, value)?,
        "runs" => cfg.runs = parse_value(key, value)?,
        "seed" => cfg.master_seed = parse_value(key, value)?,
        "belief_update" => cfg.belief_update = parse_value(key, &value.replace('_', "-"))?,
        "search" => cfg.search = parse_value(key, &value.replace('_', "-"))?,
        "realloc_position" => cfg.realloc_position = parse_value(key, &value.replace('_', "-"))?,
        "bottom_up_start" => cfg.bottom_up_start = parse_value(key, &value.replace('_', "-"))?,
        "shock" => cfg.shock_enabled = parse_bool(key, value)?,
        "noise_sd" => cfg.noise_sd = parse_value(key, value)?,
        "recovery_short" => cfg.recovery_short = parse_value(key, value)?,
        "recovery_long" => cfg.recovery_long = parse_value(key, value)?,
        _ => return Err(config_error(format!("unknown key `{key}`"))),
    }
    Ok(())
}

/// Fully resolved invocation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub grid: ScenarioGrid,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub variance: VarianceModel,
}

/// Builds the validated scenario grid. Recovery checkpoints left unset
/// follow a shortened horizon.
pub fn resolve(raw: &RawConfig) -> Result<Resolved> {
    let mut spec = GridSpec::default();
    let mut variance = VarianceModel::Pooled;
    let mut workers = None;
    let mut out = None;
    for (key, value) in &raw.top {
        match key.as_str() {
            "rho" => spec.rhos = parse_list(key, value)?,
            "pattern" => spec.patterns = parse_list::<PatternKind>(key, value)?,
            "mode" => spec.modes = parse_list::<Mode>(key, &value.replace('_', "-"))?,
            "gamma" => spec.gammas = parse_list(key, value)?,
            "lambda" => spec.lambdas = parse_list(key, value)?,
            "variance" => {
                variance = match value.as_str() {
                    "pooled" => VarianceModel::Pooled,
                    "welch" => VarianceModel::Welch,
                    _ => return Err(config_error(format!("`variance = {value}`: expected pooled or welch"))),
                }
            }
            "workers" => {
                let n: usize = parse_value(key, value)?;
                if n == 0 {
                    return Err(config_error("workers must be at least 1".into()));
                }
                workers = Some(n);
            }
            "out" => out = Some(PathBuf::from(value)),
            _ => apply_scalar(&mut spec.base, key, value)?,
        }
    }
    let horizon = spec.base.horizon;
    if !raw.top.contains_key("recovery_long") {
        spec.base.recovery_long = horizon;
    }
    if !raw.top.contains_key("recovery_short") {
        spec.base.recovery_short = spec.base.recovery_short.min(horizon);
    }

    let mut grid = build_grid(&spec)?;
    for (label, overrides) in &raw.sections {
        let cfg = grid
            .scenarios
            .iter_mut()
            .find(|s| &s.label == label)
            .ok_or_else(|| config_error(format!("section [{label}] matches no scenario in the grid")))?;
        for (key, value) in overrides {
            apply_scalar(cfg, key, value)?;
        }
        cfg.validate()?;
    }
    Ok(Resolved { grid, out, workers, variance })
}
