//! Results directory: per-scenario run records and series, rendered tables
//! and a manifest describing the sweep.
//!
//! ```text
//! <out>/manifest.json
//! <out>/<label>/runs.csv     run,seed,p50,p51,p100,p200
//! <out>/<label>/series.csv   t,mean_normalized
//! <out>/table2.csv|md        absorption
//! <out>/table3.csv|md        recovery
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::aggregate::{run_scenario, RunRecord, ScenarioResult, ScenarioRuns};
use crate::experiments::grid::ScenarioGrid;
use crate::experiments::report::{build_report, Report};
use crate::experiments::stats::VarianceModel;
use crate::par::Execution;

pub const MANIFEST: &str = "manifest.json";
pub const RUNS: &str = "runs.csv";
pub const SERIES: &str = "series.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub code_version: String,
    pub master_seed: u64,
    pub variance_model: VarianceModel,
    pub grid: ScenarioGrid,
}

impl Manifest {
    pub fn new(grid: ScenarioGrid, variance_model: VarianceModel) -> Self {
        let master_seed = grid.scenarios.first().map_or(0, |s| s.master_seed);
        Manifest {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed,
            variance_model,
            grid,
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn runs_header(anchors: [usize; 4]) -> String {
    format!("run,seed,p{},p{},p{},p{}", anchors[0], anchors[1], anchors[2], anchors[3])
}

pub fn runs_csv(runs: &ScenarioRuns) -> String {
    let mut out = runs_header(runs.config.anchors());
    out.push('\n');
    for r in &runs.records {
        let [a, b, c, d] = r.anchors;
        out.push_str(&format!("{},{},{a},{b},{c},{d}\n", r.run, r.seed));
    }
    out
}

pub fn series_csv(series: &[f64]) -> String {
    let mut out = String::from("t,mean_normalized\n");
    for (t, v) in series.iter().enumerate() {
        out.push_str(&format!("{t},{v}\n"));
    }
    out
}

/// Parses a `runs.csv` written for `anchors`.
pub fn parse_runs(path: &Path, text: &str, anchors: [usize; 4]) -> Result<Vec<RunRecord>> {
    let bad = |message: String| Error::Results { path: path.to_path_buf(), message };
    let mut lines = text.lines();
    let expected = runs_header(anchors);
    match lines.next() {
        Some(h) if h == expected => {}
        other => return Err(bad(format!("expected header `{expected}`, found `{}`", other.unwrap_or("")))),
    }
    let mut records = Vec::new();
    for (n, line) in lines.enumerate() {
        let line_no = n + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(bad(format!("line {line_no}: expected 6 fields, found {}", fields.len())));
        }
        let run = fields[0].parse().map_err(|e| bad(format!("line {line_no}: run: {e}")))?;
        let seed = fields[1].parse().map_err(|e| bad(format!("line {line_no}: seed: {e}")))?;
        let mut values = [0.0; 4];
        for (k, v) in values.iter_mut().enumerate() {
            *v = fields[2 + k].parse().map_err(|e| bad(format!("line {line_no}: value: {e}")))?;
        }
        records.push(RunRecord { run, seed, anchors: values });
    }
    Ok(records)
}

pub fn scenario_dir(out: &Path, label: &str) -> PathBuf {
    out.join(label)
}

/// Simulates every scenario in grid order.
pub fn sweep(grid: &ScenarioGrid, execution: Execution) -> Result<Vec<ScenarioResult>> {
    grid.scenarios.iter().map(|cfg| run_scenario(cfg, execution)).collect()
}

/// Writes one scenario's `runs.csv` and `series.csv`.
pub fn write_scenario(out: &Path, result: &ScenarioResult) -> Result<()> {
    let dir = scenario_dir(out, &result.runs.config.label);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write(&dir.join(RUNS), &runs_csv(&result.runs))?;
    write(&dir.join(SERIES), &series_csv(&result.series))
}

pub fn write_manifest(out: &Path, manifest: &Manifest) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    write(&out.join(MANIFEST), &(json + "\n"))
}

pub fn write_report(out: &Path, report: &Report) -> Result<()> {
    write(&out.join("table2.csv"), &report.absorption_csv())?;
    write(&out.join("table2.md"), &report.absorption_markdown())?;
    write(&out.join("table3.csv"), &report.recovery_csv())?;
    write(&out.join("table3.md"), &report.recovery_markdown())
}

/// Reads the manifest and every scenario's run records from a finished sweep.
pub fn load_sweep(out: &Path) -> Result<(Manifest, Vec<ScenarioRuns>)> {
    let path = out.join(MANIFEST);
    if !path.is_file() {
        return Err(Error::Results {
            path,
            message: "no sweep results found; run `sweep` first".into(),
        });
    }
    let manifest: Manifest = serde_json::from_str(&read(&path)?)
        .map_err(|e| Error::Results { path: path.clone(), message: e.to_string() })?;
    let mut scenarios = Vec::with_capacity(manifest.grid.len());
    for config in &manifest.grid.scenarios {
        let runs_path = scenario_dir(out, &config.label).join(RUNS);
        if !runs_path.is_file() {
            return Err(Error::Results { path: runs_path, message: "missing; the sweep is incomplete".into() });
        }
        let records = parse_runs(&runs_path, &read(&runs_path)?, config.anchors())?;
        if records.len() != config.runs {
            return Err(Error::Results {
                path: runs_path,
                message: format!("{} runs recorded, manifest expects {}", records.len(), config.runs),
            });
        }
        scenarios.push(ScenarioRuns { config: config.clone(), records });
    }
    Ok((manifest, scenarios))
}

/// Re-renders the tables of a finished sweep from its persisted records.
pub fn report_from_dir(out: &Path) -> Result<Report> {
    let (manifest, scenarios) = load_sweep(out)?;
    let report = build_report(&scenarios, manifest.variance_model)?;
    write_report(out, &report)?;
    Ok(report)
}

/// Runs the grid and writes the full results layout.
pub fn sweep_to_dir(out: &Path, grid: &ScenarioGrid, model: VarianceModel, execution: Execution) -> Result<Report> {
    write_manifest(out, &Manifest::new(grid.clone(), model))?;
    let mut runs = Vec::with_capacity(grid.len());
    for cfg in &grid.scenarios {
        let result = run_scenario(cfg, execution)?;
        write_scenario(out, &result)?;
        runs.push(result.runs);
    }
    let report = build_report(&runs, model)?;
    write_report(out, &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::grid::{build_grid, GridSpec};
    use crate::simulation::{Mode, ScenarioConfig};

    fn small_grid() -> ScenarioGrid {
        let base = ScenarioConfig { runs: 6, horizon: 70, recovery_short: 60, recovery_long: 70, ..Default::default() };
        let spec = GridSpec { rhos: vec![0.5], patterns: vec![crate::landscape::PatternKind::Modular], gammas: vec![1.0], base, ..Default::default() };
        build_grid(&spec).unwrap()
    }

    #[test]
    fn round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let grid = small_grid();
        assert_eq!(grid.len(), 4);
        let swept = sweep_to_dir(dir.path(), &grid, VarianceModel::Pooled, Execution::Sequential).unwrap();
        let table2 = fs::read_to_string(dir.path().join("table2.csv")).unwrap();
        let reported = report_from_dir(dir.path()).unwrap();
        assert_eq!(swept, reported);
        assert_eq!(table2, fs::read_to_string(dir.path().join("table2.csv")).unwrap());

        let label = &grid.scenarios[0].label;
        let runs = fs::read_to_string(dir.path().join(label).join(RUNS)).unwrap();
        assert!(runs.starts_with("run,seed,p50,p51,p60,p70\n"));
        assert_eq!(runs.lines().count(), 7);
        let series = fs::read_to_string(dir.path().join(label).join(SERIES)).unwrap();
        assert_eq!(series.lines().count(), 72);
        for name in ["table2.md", "table3.csv", "table3.md", MANIFEST] {
            assert!(dir.path().join(name).is_file(), "{name}");
        }
    }

    #[test]
    fn report_without_sweep_fails() {
        let dir = tempfile::tempdir().unwrap();
        let err = report_from_dir(dir.path()).unwrap_err().to_string();
        assert!(err.contains("run `sweep` first"), "{err}");
    }

    #[test]
    fn truncated_runs_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let grid = small_grid();
        sweep_to_dir(dir.path(), &grid, VarianceModel::Pooled, Execution::Sequential).unwrap();
        let path = dir.path().join(&grid.scenarios[1].label).join(RUNS);
        let text = fs::read_to_string(&path).unwrap();
        let short: Vec<&str> = text.lines().take(4).collect();
        fs::write(&path, short.join("\n")).unwrap();
        assert!(report_from_dir(dir.path()).is_err());
    }

    #[test]
    fn parse_round_trip_is_exact() {
        let grid = small_grid();
        let cfg = grid.scenarios.iter().find(|c| c.mode == Mode::BottomUp).unwrap();
        let result = run_scenario(cfg, Execution::Sequential).unwrap();
        let text = runs_csv(&result.runs);
        let parsed = parse_runs(Path::new("x"), &text, cfg.anchors()).unwrap();
        assert_eq!(parsed, result.runs.records);
    }
}
