//! Scenario grids, aggregation over runs, significance tests and the
//! absorption and recovery tables.

pub mod aggregate;
pub mod checks;
pub mod grid;
pub mod report;
pub mod results;
pub mod stats;

pub use aggregate::{deltas, mean_normalized, run_scenario, RunRecord, ScenarioResult, ScenarioRuns};
pub use grid::{build_grid, GridSpec, ScenarioGrid};
pub use report::{build_report, Report};
pub use results::{load_sweep, report_from_dir, sweep, sweep_to_dir, Manifest};
pub use stats::{stars, t_test_independent, t_test_paired, TTest, VarianceModel};
