//! Folding run traces into per-scenario averages.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};
use crate::simulation::{RunTrace, Scenario, ScenarioConfig};

/// Normalized performance of one run at the anchor periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub anchors: [f64; 4],
}

impl RunRecord {
    pub fn from_trace(trace: &RunTrace, anchors: [usize; 4]) -> Self {
        RunRecord {
            run: trace.run_index,
            seed: trace.seed,
            anchors: anchors.map(|t| trace.normalized[t]),
        }
    }
}

/// Per-run anchor records of one scenario. Everything the tables need.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRuns {
    pub config: ScenarioConfig,
    pub records: Vec<RunRecord>,
}

impl ScenarioRuns {
    /// Mean over runs of anchor `k` (0: before shock, 1: after, 2 and 3:
    /// recovery checkpoints).
    pub fn mean_at(&self, k: usize) -> f64 {
        mean(self.records.iter().map(|r| r.anchors[k]))
    }

    /// Per-run values of anchor `k`, in run order.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.anchors[k]).collect()
    }

    /// Per-run change from anchor `from` to anchor `to`.
    pub fn run_deltas(&self, from: usize, to: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.anchors[to] - r.anchors[from]).collect()
    }
}

/// A simulated scenario: anchor records plus the mean normalized series.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub runs: ScenarioRuns,
    /// Mean normalized performance for every period `0..=horizon`.
    pub series: Vec<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Average normalized performance of `traces` at period `t`.
pub fn mean_normalized(traces: &[RunTrace], t: usize) -> Result<f64> {
    if traces.is_empty() {
        return Err(Error::Config("no traces to average".into()));
    }
    let mut sum = 0.0;
    for trace in traces {
        let v = trace.normalized.get(t).ok_or_else(|| {
            Error::Config(format!("period {t} beyond a trace of {} periods", trace.normalized.len()))
        })?;
        sum += v;
    }
    Ok(sum / traces.len() as f64)
}

/// Absolute and relative change from `before` to `after`.
pub fn deltas(before: f64, after: f64) -> (f64, f64) {
    let d = after - before;
    (d, d / before)
}

/// Simulates every run of `config` and folds the traces in run order, so the
/// result does not depend on how runs were scheduled.
pub fn run_scenario(config: &ScenarioConfig, execution: Execution) -> Result<ScenarioResult> {
    let scenario = Scenario::new(config.clone())?;
    let anchors = config.anchors();
    let periods = config.horizon + 1;
    let outcomes = map_indexed(config.runs, execution, |r| {
        scenario.run(r, false).map(|trace| (RunRecord::from_trace(&trace, anchors), trace.normalized))
    });

    let mut records = Vec::with_capacity(config.runs);
    let mut sums = vec![0.0; periods];
    for outcome in outcomes {
        let (record, normalized) = outcome?;
        for (s, v) in sums.iter_mut().zip(&normalized) {
            *s += v;
        }
        records.push(record);
    }
    let n = config.runs as f64;
    Ok(ScenarioResult {
        runs: ScenarioRuns { config: config.clone(), records },
        series: sums.into_iter().map(|s| s / n).collect(),
    })
}
