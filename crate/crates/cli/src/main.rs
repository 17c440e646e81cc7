//! Command-line driver for the organization simulator.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use orgsim::experiments::checks::run_checks;
use orgsim::experiments::results::{runs_csv, scenario_dir, series_csv};
use orgsim::experiments::{report_from_dir, run_scenario, sweep_to_dir, Report, ScenarioGrid};
use orgsim::par::{default_workers, with_workers, Execution};
use orgsim::simulation::{Scenario, ScenarioConfig};
use orgsim::Error;

use config::{resolve, RawConfig, Resolved};

#[derive(Parser)]
#[command(name = "orgsim", version, about = "Organizations adapting on NK landscapes under environmental shocks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "ORGSIM_OUT")]
    out: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: logical processors).
    #[arg(long)]
    workers: Option<usize>,
    /// Runs per scenario.
    #[arg(long)]
    runs: Option<usize>,
    /// Keep scenarios whose label contains this text.
    #[arg(long)]
    filter: Option<String>,
    /// Extra `KEY=VALUE` setting, as in the configuration file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario, or dump a single run's trace with --trace.
    Run {
        #[command(flatten)]
        common: Common,
        /// Write the per-period trace of one run.
        #[arg(long)]
        trace: bool,
        /// Run index for --trace.
        #[arg(long, default_value_t = 0)]
        run_index: usize,
    },
    /// Simulate the whole grid and write results and tables.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Re-render the tables from a finished sweep.
    Report {
        #[command(flatten)]
        common: Common,
    },
    /// Check the shock transform and the exhaustive optimum.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Shocked entries per correlation check.
        #[arg(long, default_value_t = 100_000)]
        entries: usize,
        /// Random landscapes for the optimum check.
        #[arg(long, default_value_t = 200)]
        landscapes: usize,
    },
    /// Print a run's initial landscape and optimum as JSON.
    DumpLandscape {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        run_index: usize,
    },
}

/// Failures and the exit status they map to.
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Divisibility { .. } | Error::MalformedPattern(_) | Error::RhoOutOfDomain(_)
            | Error::TooManyTasks { .. } => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

struct Setup {
    resolved: Resolved,
    out: PathBuf,
    workers: usize,
}

fn setup(common: &Common) -> Result<Setup, Failure> {
    let mut raw = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    for assignment in &common.set {
        raw.set(assignment)?;
    }
    if let Some(seed) = common.seed {
        raw.set(&format!("seed={seed}"))?;
    }
    if let Some(runs) = common.runs {
        raw.set(&format!("runs={runs}"))?;
    }
    let mut resolved = resolve(&raw)?;
    if let Some(needle) = &common.filter {
        resolved.grid = resolved.grid.filter(needle);
        if resolved.grid.is_empty() {
            return Err(Failure::Config(format!("no scenario label contains `{needle}`")));
        }
    }
    let workers = common.workers.or(resolved.workers).unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(Failure::Config("--workers must be at least 1".into()));
    }
    let out = common
        .out
        .clone()
        .or_else(|| resolved.out.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    Ok(Setup { resolved, out, workers })
}

fn single(grid: &ScenarioGrid, filter: Option<&str>) -> Result<ScenarioConfig, Failure> {
    if grid.len() == 1 {
        return Ok(grid.scenarios[0].clone());
    }
    if let Some(exact) = filter.and_then(|f| grid.get(f)) {
        return Ok(exact.clone());
    }
    let labels: Vec<&str> = grid.scenarios.iter().map(|s| s.label.as_str()).collect();
    Err(Failure::Config(format!(
        "this command needs exactly one scenario; use --filter to pick one of: {}",
        labels.join(", ")
    )))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn print_report(report: &Report) {
    println!("{}", report.absorption_markdown());
    println!("{}", report.recovery_markdown());
}

fn cmd_run(common: &Common, trace: bool, run_index: usize) -> Result<(), Failure> {
    let s = setup(common)?;
    let cfg = single(&s.resolved.grid, common.filter.as_deref())?;
    if trace {
        if run_index >= cfg.runs {
            return Err(Failure::Config(format!("--run-index {run_index} outside 0..{}", cfg.runs)));
        }
        let scenario = Scenario::new(cfg.clone())?;
        let tr = scenario.run(run_index, true)?;
        let dir = scenario_dir(&s.out, &cfg.label);
        let csv_path = dir.join(format!("trace-{run_index}.csv"));
        write_file(&csv_path, &tr.to_csv())?;
        let events = serde_json::to_string_pretty(&tr.events).expect("events serialize");
        write_file(&dir.join(format!("trace-{run_index}-events.json")), &(events + "\n"))?;
        println!("{}: run {run_index} (seed {}) -> {}", cfg.label, tr.seed, csv_path.display());
        let [b, a, short, long] = cfg.anchors();
        println!(
            "normalized: t={b} {:.4}  t={a} {:.4}  t={short} {:.4}  t={long} {:.4}",
            tr.normalized[b], tr.normalized[a], tr.normalized[short], tr.normalized[long]
        );
        return Ok(());
    }
    let result = with_workers(Some(s.workers), || run_scenario(&cfg, Execution::Parallel))?;
    let dir = scenario_dir(&s.out, &cfg.label);
    write_file(&dir.join("runs.csv"), &runs_csv(&result.runs))?;
    write_file(&dir.join("series.csv"), &series_csv(&result.series))?;
    let anchors = cfg.anchors();
    println!("{}: {} runs -> {}", cfg.label, cfg.runs, dir.display());
    for (k, t) in anchors.iter().enumerate() {
        println!("mean normalized t={t}: {:.4}", result.runs.mean_at(k));
    }
    Ok(())
}

fn cmd_sweep(common: &Common) -> Result<(), Failure> {
    let s = setup(common)?;
    let grid = &s.resolved.grid;
    eprintln!("sweeping {} scenarios with {} workers into {}", grid.len(), s.workers, s.out.display());
    let report = with_workers(Some(s.workers), || {
        sweep_to_dir(&s.out, grid, s.resolved.variance, Execution::Parallel)
    })?;
    print_report(&report);
    Ok(())
}

fn cmd_report(common: &Common) -> Result<(), Failure> {
    let s = setup(common)?;
    let report = report_from_dir(&s.out)?;
    print_report(&report);
    Ok(())
}

fn cmd_validate(common: &Common, entries: usize, landscapes: usize) -> Result<(), Failure> {
    let s = setup(common)?;
    let mut rhos = vec![0.0];
    for cfg in &s.resolved.grid.scenarios {
        if !rhos.contains(&cfg.rho) {
            rhos.push(cfg.rho);
        }
    }
    rhos.sort_by(f64::total_cmp);
    let seed = s.resolved.grid.scenarios[0].master_seed;
    let outcomes = run_checks(&rhos, entries, landscapes, seed)?;
    let mut failed = 0;
    for o in &outcomes {
        println!("[{}] {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} of {} checks failed", outcomes.len())));
    }
    Ok(())
}

fn cmd_dump_landscape(common: &Common, run_index: usize) -> Result<(), Failure> {
    let s = setup(common)?;
    let cfg = single(&s.resolved.grid, common.filter.as_deref())?;
    let scenario = Scenario::new(cfg.clone())?;
    let landscape = scenario.initial_landscape(run_index);
    let (max, argmax) = landscape.global_max()?;
    let dump = serde_json::json!({
        "scenario": cfg.label,
        "run_index": run_index,
        "pattern": landscape.pattern().to_text(),
        "tables": landscape.tables(),
        "global_max": max,
        "argmax": argmax.to_string(),
    });
    println!("{}", serde_json::to_string_pretty(&dump).expect("dump serializes"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { common, trace, run_index } => cmd_run(common, *trace, *run_index),
        Command::Sweep { common } => cmd_sweep(common),
        Command::Report { common } => cmd_report(common),
        Command::Validate { common, entries, landscapes } => cmd_validate(common, *entries, *landscapes),
        Command::DumpLandscape { common, run_index } => cmd_dump_landscape(common, *run_index),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
    }
}
