//! Absorption and recovery tables.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::aggregate::{deltas, ScenarioRuns};
use crate::experiments::grid::{allocation_name, benchmark_label, incentive_name, pattern_name, shock_name};
use crate::experiments::stats::{stars, t_test_independent, t_test_paired, TTest, VarianceModel};
use crate::simulation::Mode;

const BEFORE: usize = 0;
const AFTER: usize = 1;
const SHORT: usize = 2;
const LONG: usize = 3;

/// Row key shared by both tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowKey {
    pub label: String,
    pub shock: String,
    pub pattern: String,
    pub allocation: String,
    pub incentive: String,
}

impl RowKey {
    fn of(runs: &ScenarioRuns) -> Self {
        let c = &runs.config;
        RowKey {
            label: c.label.clone(),
            shock: shock_name(c.rho),
            pattern: pattern_name(&c.pattern),
            allocation: allocation_name(c.mode, c.gamma),
            incentive: incentive_name(c.lambda),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Absorption {
    pub before: f64,
    pub after: f64,
    pub delta: f64,
}

impl Absorption {
    fn of(runs: &ScenarioRuns) -> Self {
        let (before, after) = (runs.mean_at(BEFORE), runs.mean_at(AFTER));
        Absorption { before, after, delta: deltas(before, after).0 }
    }
}

/// One absorption row: a bottom-up scenario next to its top-down benchmark.
/// Grids without bottom-up cells list the benchmarks alone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsorptionRow {
    pub key: RowKey,
    pub bottom_up: Option<Absorption>,
    pub benchmark: Absorption,
    /// Independent test of per-run shock deltas, bottom-up vs benchmark.
    pub test: Option<TTest>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Recovery {
    pub period: usize,
    pub level: f64,
    pub relative: f64,
    /// Paired test of per-run values at the checkpoint vs before the shock.
    pub test: TTest,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryRow {
    pub key: RowKey,
    pub before: f64,
    pub short: Recovery,
    pub long: Recovery,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub shock_period: usize,
    pub absorption: Vec<AbsorptionRow>,
    pub recovery: Vec<RecoveryRow>,
}

fn recovery(runs: &ScenarioRuns, k: usize) -> Result<Recovery> {
    let before = runs.mean_at(BEFORE);
    let level = runs.mean_at(k);
    Ok(Recovery {
        period: runs.config.anchors()[k],
        level,
        relative: deltas(before, level).1,
        test: t_test_paired(&runs.column(BEFORE), &runs.column(k))?,
    })
}

/// Builds both tables. Every bottom-up scenario needs its benchmark in
/// `scenarios`; one benchmark serves all bottom-up rows that share its
/// shock, pattern and incentives.
pub fn build_report(scenarios: &[ScenarioRuns], model: VarianceModel) -> Result<Report> {
    let Some(first) = scenarios.first() else {
        return Err(Error::Config("no scenarios to report".into()));
    };
    let shock_period = first.config.shock_period;
    let by_label: HashMap<&str, &ScenarioRuns> =
        scenarios.iter().map(|s| (s.config.label.as_str(), s)).collect();

    let bottom_up: Vec<&ScenarioRuns> = scenarios.iter().filter(|s| s.config.mode == Mode::BottomUp).collect();
    let top_down: Vec<&ScenarioRuns> = scenarios.iter().filter(|s| s.config.mode == Mode::TopDown).collect();

    let mut absorption = Vec::new();
    if bottom_up.is_empty() {
        for bench in &top_down {
            absorption.push(AbsorptionRow {
                key: RowKey::of(bench),
                bottom_up: None,
                benchmark: Absorption::of(bench),
                test: None,
            });
        }
    } else {
        for cell in &bottom_up {
            let label = benchmark_label(&cell.config);
            let bench = by_label.get(label.as_str()).ok_or_else(|| {
                Error::Config(format!("incomplete grid: `{}` has no benchmark `{label}`", cell.config.label))
            })?;
            let test = t_test_independent(&cell.run_deltas(BEFORE, AFTER), &bench.run_deltas(BEFORE, AFTER), model)?;
            absorption.push(AbsorptionRow {
                key: RowKey::of(cell),
                bottom_up: Some(Absorption::of(cell)),
                benchmark: Absorption::of(bench),
                test: Some(test),
            });
        }
    }

    let mut recovery_rows = Vec::new();
    for runs in bottom_up.iter().chain(&top_down) {
        recovery_rows.push(RecoveryRow {
            key: RowKey::of(runs),
            before: runs.mean_at(BEFORE),
            short: recovery(runs, SHORT)?,
            long: recovery(runs, LONG)?,
        });
    }
    Ok(Report { shock_period, absorption, recovery: recovery_rows })
}

fn f3(x: f64) -> String {
    format!("{x:.3}")
}

fn pct(x: f64) -> String {
    format!("{:+.2}%", 100.0 * x)
}

impl Report {
    fn absorption_rows(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let header = vec![
            "shock", "pattern", "allocation", "incentive",
            "bu_before", "bu_after", "bu_delta",
            "bench_before", "bench_after", "bench_delta",
            "t", "p", "sig",
        ];
        let rows = self
            .absorption
            .iter()
            .map(|row| {
                let k = &row.key;
                let mut cells = vec![k.shock.clone(), k.pattern.clone(), k.allocation.clone(), k.incentive.clone()];
                match row.bottom_up {
                    Some(b) => cells.extend([f3(b.before), f3(b.after), f3(b.delta)]),
                    None => cells.extend(["".into(), "".into(), "".into()]),
                }
                let m = row.benchmark;
                cells.extend([f3(m.before), f3(m.after), f3(m.delta)]);
                match row.test {
                    Some(t) => cells.extend([format!("{:.3}", t.t), format!("{:.4}", t.p), stars(t.p).into()]),
                    None => cells.extend(["".into(), "".into(), "".into()]),
                }
                cells
            })
            .collect();
        (header, rows)
    }

    fn recovery_rows(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let (s, l) = self
            .recovery
            .first()
            .map_or((0, 0), |r| (r.short.period, r.long.period));
        let header = vec![
            "shock".into(), "pattern".into(), "allocation".into(), "incentive".into(),
            "before".into(),
            format!("p{s}"), format!("rel_{s}"), format!("sig_{s}"),
            format!("p{l}"), format!("rel_{l}"), format!("sig_{l}"),
        ];
        let rows = self
            .recovery
            .iter()
            .map(|row| {
                let k = &row.key;
                vec![
                    k.shock.clone(), k.pattern.clone(), k.allocation.clone(), k.incentive.clone(),
                    f3(row.before),
                    f3(row.short.level), pct(row.short.relative), stars(row.short.test.p).into(),
                    f3(row.long.level), pct(row.long.relative), stars(row.long.test.p).into(),
                ]
            })
            .collect();
        (header, rows)
    }

    pub fn absorption_csv(&self) -> String {
        let (header, rows) = self.absorption_rows();
        csv(&header, &rows)
    }

    pub fn recovery_csv(&self) -> String {
        let (header, rows) = self.recovery_rows();
        csv(&header, &rows)
    }

    pub fn absorption_markdown(&self) -> String {
        let (s, a) = (self.shock_period, self.shock_period + 1);
        let header = [
            "Shock", "Pattern", "Allocation", "Incentives",
            &format!("BU P̄{s}"), &format!("BU P̄{a}"), "BU Δ",
            &format!("Bench P̄{s}"), &format!("Bench P̄{a}"), "Bench Δ", "Sig.",
        ]
        .map(String::from);
        let (_, rows) = self.absorption_rows();
        let rows: Vec<Vec<String>> = rows
            .into_iter()
            .map(|mut r| {
                let sig = r.pop().unwrap_or_default();
                r.truncate(10);
                r.push(sig);
                r
            })
            .collect();
        markdown("Ability to absorb shocks", &header, &rows)
    }

    pub fn recovery_markdown(&self) -> String {
        let (header, rows) = self.recovery_rows();
        let header: Vec<String> = header
            .iter()
            .map(|h| match h.as_str() {
                "shock" => "Shock".into(),
                "pattern" => "Pattern".into(),
                "allocation" => "Allocation".into(),
                "incentive" => "Incentives".into(),
                "before" => format!("P̄{}", self.shock_period),
                other => other
                    .replace("rel_", "Δrel ")
                    .replace("sig_", "Sig. ")
                    .replacen('p', "P̄", 1),
            })
            .collect();
        markdown("Ability to recover from shocks", &header, &rows)
    }
}

fn csv<H: AsRef<str>>(header: &[H], rows: &[Vec<String>]) -> String {
    let mut out = header.iter().map(|h| h.as_ref()).collect::<Vec<_>>().join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn markdown(title: &str, header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = format!("# {title}\n\n| {} |\n|", header.join(" | "));
    for _ in header {
        out.push_str("---|");
    }
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "| {} |", row.join(" | "));
    }
    out.push_str("\nSignificance: ** p ≤ 0.01, * p ≤ 0.05, n.s. otherwise. Two-sided tests.\n");
    out
}
