//! The scenario grid: shock sign × pattern × allocation mode × incentives.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::PatternKind;
use crate::simulation::{Mode, ScenarioConfig};

pub const ALTRUISTIC: f64 = 0.33;
pub const INDIVIDUAL: f64 = 1.0;
pub const MIRRORING: f64 = 0.0;
pub const UTILITY: f64 = 1.0;
pub const POSITIVE: f64 = 0.5;
pub const NEGATIVE: f64 = -0.5;

/// Axis values of the grid plus the scalar settings every cell shares.
///
/// `gammas` applies to bottom-up cells only. Top-down cells keep the base
/// gamma, which they never use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rhos: Vec<f64>,
    pub patterns: Vec<PatternKind>,
    pub modes: Vec<Mode>,
    pub gammas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub base: ScenarioConfig,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            rhos: vec![POSITIVE, NEGATIVE],
            patterns: vec![PatternKind::Modular, PatternKind::NonModular],
            modes: vec![Mode::BottomUp, Mode::TopDown],
            gammas: vec![MIRRORING, UTILITY],
            lambdas: vec![ALTRUISTIC, INDIVIDUAL],
            base: ScenarioConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGrid {
    pub scenarios: Vec<ScenarioConfig>,
}

impl ScenarioGrid {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&ScenarioConfig> {
        self.scenarios.iter().find(|s| s.label == label)
    }

    /// Keeps the scenarios whose label contains `needle`.
    pub fn filter(&self, needle: &str) -> ScenarioGrid {
        ScenarioGrid {
            scenarios: self.scenarios.iter().filter(|s| s.label.contains(needle)).cloned().collect(),
        }
    }
}

fn named(value: f64, names: &[(f64, &str)], prefix: &str) -> String {
    names
        .iter()
        .find(|(v, _)| *v == value)
        .map_or_else(|| format!("{prefix}{value}"), |(_, n)| n.to_string())
}

pub fn shock_name(rho: f64) -> String {
    named(rho, &[(POSITIVE, "positive"), (NEGATIVE, "negative")], "rho")
}

pub fn incentive_name(lambda: f64) -> String {
    named(lambda, &[(ALTRUISTIC, "altruistic"), (INDIVIDUAL, "individual")], "lambda")
}

/// `benchmark` for top-down cells, otherwise the reallocation rule.
pub fn allocation_name(mode: Mode, gamma: f64) -> String {
    match mode {
        Mode::TopDown => "benchmark".into(),
        Mode::BottomUp => named(gamma, &[(MIRRORING, "mirroring"), (UTILITY, "utility")], "gamma"),
    }
}

pub fn pattern_name(pattern: &PatternKind) -> String {
    match pattern {
        PatternKind::Custom(path) => {
            let stem = Path::new(path).file_stem().and_then(|s| s.to_str()).unwrap_or("pattern");
            let clean: String = stem
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
                .collect();
            format!("custom-{clean}")
        }
        other => other.label().to_string(),
    }
}

pub fn scenario_label(rho: f64, pattern: &PatternKind, mode: Mode, gamma: f64, lambda: f64) -> String {
    format!(
        "{}-{}-{}-{}",
        shock_name(rho),
        pattern_name(pattern),
        allocation_name(mode, gamma),
        incentive_name(lambda)
    )
}

/// Label of the top-down cell a scenario is compared against.
pub fn benchmark_label(config: &ScenarioConfig) -> String {
    scenario_label(config.rho, &config.pattern, Mode::TopDown, config.gamma, config.lambda)
}

/// Expands the axes into validated scenarios: bottom-up cells first, then
/// top-down, each in rho, pattern, gamma, lambda order.
pub fn build_grid(spec: &GridSpec) -> Result<ScenarioGrid> {
    let axes: [(&str, bool); 5] = [
        ("rho", spec.rhos.is_empty()),
        ("pattern", spec.patterns.is_empty()),
        ("mode", spec.modes.is_empty()),
        ("gamma", spec.gammas.is_empty() && spec.modes.contains(&Mode::BottomUp)),
        ("lambda", spec.lambdas.is_empty()),
    ];
    if let Some((name, _)) = axes.iter().find(|(_, empty)| *empty) {
        return Err(Error::Config(format!("grid axis `{name}` has no values")));
    }

    let mut scenarios = Vec::new();
    for mode in [Mode::BottomUp, Mode::TopDown] {
        if !spec.modes.contains(&mode) {
            continue;
        }
        let gammas = match mode {
            Mode::BottomUp => spec.gammas.clone(),
            Mode::TopDown => vec![spec.base.gamma],
        };
        for &rho in &spec.rhos {
            for pattern in &spec.patterns {
                for &gamma in &gammas {
                    for &lambda in &spec.lambdas {
                        scenarios.push(ScenarioConfig {
                            label: scenario_label(rho, pattern, mode, gamma, lambda),
                            mode,
                            rho,
                            pattern: pattern.clone(),
                            gamma,
                            lambda,
                            ..spec.base.clone()
                        });
                    }
                }
            }
        }
    }

    let mut seen = BTreeSet::new();
    for s in &scenarios {
        s.validate()?;
        if !seen.insert(s.label.as_str()) {
            return Err(Error::Config(format!("grid produces the label `{}` twice", s.label)));
        }
    }
    Ok(ScenarioGrid { scenarios })
}
