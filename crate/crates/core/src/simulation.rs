//! One simulation run: landscape, search, learning, reallocation and shock.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::decisions::Decisions;
use crate::error::{Error, Result};
use crate::landscape::{apply_shock, build_pattern, InteractionPattern, Landscape, PatternKind, GLOBAL_MAX_TASK_LIMIT};
use crate::organization::{agent_search_step, Allocation, BeliefUpdate, OrgState, SearchRule};
use crate::reallocation::{reallocation_round, RoundLog, RoundParams, DEFAULT_NOISE_SD};
use crate::rng::{derive_stream, run_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Fixed sequential allocation chosen by a designer who knows the pattern.
    TopDown,
    /// Agents reallocate tasks among themselves every `realloc_interval` periods.
    BottomUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ReallocPosition {
    #[default]
    BeforeSearch,
    AfterSearch,
}

macro_rules! named {
    ($ty:ty, $($variant:path => $name:literal),+ $(,)?) => {
        impl $ty {
            pub fn name(&self) -> &'static str {
                match self { $($variant => $name),+ }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    _ => Err(Error::Config(format!(
                        concat!("expected one of {{", $($name, ",",)+ "}}, got `{}`"), s
                    ))),
                }
            }
        }
    };
}

/// Allocation bottom-up organizations start from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitialAllocation {
    /// The designer's sequential allocation, same as top-down.
    #[default]
    Sequential,
    /// `N/M` tasks per agent, drawn as a uniformly random partition.
    Shuffled,
}

named!(InitialAllocation, InitialAllocation::Sequential => "sequential", InitialAllocation::Shuffled => "shuffled");
named!(Mode, Mode::TopDown => "top-down", Mode::BottomUp => "bottom-up");
named!(ReallocPosition, ReallocPosition::BeforeSearch => "before-search", ReallocPosition::AfterSearch => "after-search");

/// One cell of the experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub label: String,
    pub mode: Mode,
    pub rho: f64,
    pub pattern: PatternKind,
    pub gamma: f64,
    pub lambda: f64,
    pub n_tasks: usize,
    pub n_agents: usize,
    pub capacity: usize,
    pub realloc_interval: usize,
    pub shock_period: usize,
    pub horizon: usize,
    pub runs: usize,
    pub master_seed: u64,
    pub belief_update: BeliefUpdate,
    pub search: SearchRule,
    pub realloc_position: ReallocPosition,
    pub bottom_up_start: InitialAllocation,
    pub shock_enabled: bool,
    pub noise_sd: f64,
    pub recovery_short: usize,
    pub recovery_long: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            label: "default".into(),
            mode: Mode::TopDown,
            rho: 0.5,
            pattern: PatternKind::Modular,
            gamma: 1.0,
            lambda: 1.0,
            n_tasks: 15,
            n_agents: 5,
            capacity: 7,
            realloc_interval: 20,
            shock_period: 50,
            horizon: 200,
            runs: 600,
            master_seed: 0,
            belief_update: BeliefUpdate::PerBit,
            search: SearchRule::SingleFlip,
            realloc_position: ReallocPosition::BeforeSearch,
            bottom_up_start: InitialAllocation::Sequential,
            shock_enabled: true,
            noise_sd: DEFAULT_NOISE_SD,
            recovery_short: 100,
            recovery_long: 200,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(format!("{}: {msg}", self.label)));
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return fail(format!("rho = {} outside (-1, 1)", self.rho));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return fail(format!("lambda = {} outside (0, 1]", self.lambda));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail(format!("gamma = {} outside [0, 1]", self.gamma));
        }
        if self.n_agents < 2 {
            return fail(format!("n_agents = {} must be at least 2", self.n_agents));
        }
        if self.n_tasks == 0 || !self.n_tasks.is_multiple_of(self.n_agents) {
            return fail(format!(
                "n_agents = {} must divide n_tasks = {}",
                self.n_agents, self.n_tasks
            ));
        }
        if self.n_tasks > GLOBAL_MAX_TASK_LIMIT {
            return fail(format!(
                "n_tasks = {} exceeds the exhaustive-optimum limit {GLOBAL_MAX_TASK_LIMIT}",
                self.n_tasks
            ));
        }
        let per_agent = self.n_tasks / self.n_agents;
        if self.capacity < per_agent || self.capacity > self.n_tasks {
            return fail(format!(
                "capacity = {} outside [{per_agent}, {}]",
                self.capacity, self.n_tasks
            ));
        }
        if self.realloc_interval == 0 {
            return fail("realloc_interval must be positive".into());
        }
        if self.shock_period >= self.horizon {
            return fail(format!(
                "shock_period = {} must precede horizon = {}",
                self.shock_period, self.horizon
            ));
        }
        for (name, t) in [("recovery_short", self.recovery_short), ("recovery_long", self.recovery_long)] {
            if t <= self.shock_period || t > self.horizon {
                return fail(format!(
                    "{name} = {t} outside ({}, {}]",
                    self.shock_period, self.horizon
                ));
            }
        }
        if self.runs == 0 {
            return fail("runs must be positive".into());
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return fail(format!("noise_sd = {} must be non-negative", self.noise_sd));
        }
        Ok(())
    }

    /// Periods reported per run: before the shock, right after it, and the
    /// two recovery checkpoints.
    pub fn anchors(&self) -> [usize; 4] {
        [
            self.shock_period,
            self.shock_period + 1,
            self.recovery_short,
            self.recovery_long,
        ]
    }

    fn round_params(&self) -> RoundParams {
        RoundParams {
            gamma: self.gamma,
            lambda: self.lambda,
            capacity: self.capacity,
            noise_sd: self.noise_sd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Event {
    Reallocation {
        period: usize,
        log: RoundLog,
        owners: Vec<usize>,
    },
    Shock {
        period: usize,
        max_before: f64,
        max_after: f64,
    },
}

/// Per-period record of one run. Index `t` holds period `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub run_index: usize,
    pub seed: u64,
    pub raw: Vec<f64>,
    pub pmax: Vec<f64>,
    pub normalized: Vec<f64>,
    pub events: Vec<Event>,
}

impl RunTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,raw,pmax,normalized\n");
        for t in 0..self.raw.len() {
            out.push_str(&format!(
                "{t},{},{},{}\n",
                self.raw[t], self.pmax[t], self.normalized[t]
            ));
        }
        out
    }
}

/// A validated scenario with its interaction pattern loaded.
#[derive(Debug, Clone)]
pub struct Scenario {
    config: ScenarioConfig,
    pattern: Arc<InteractionPattern>,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let pattern = Arc::new(build_pattern(&config.pattern, config.n_tasks, config.n_agents)?);
        Ok(Scenario { config, pattern })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn pattern(&self) -> &Arc<InteractionPattern> {
        &self.pattern
    }

    /// The landscape run `run_index` starts on.
    pub fn initial_landscape(&self, run_index: usize) -> Landscape {
        let mut rng = derive_stream(self.config.master_seed, &self.config.label, run_index as u64);
        Landscape::generate(Arc::clone(&self.pattern), &mut rng)
    }

    /// Simulates run `run_index`. With `record_events` the trace also keeps
    /// every reallocation round and the shock.
    pub fn run(&self, run_index: usize, record_events: bool) -> Result<RunTrace> {
        let cfg = &self.config;
        let mut rng = derive_stream(cfg.master_seed, &cfg.label, run_index as u64);
        let mut landscape = Landscape::generate(Arc::clone(&self.pattern), &mut rng);
        let mut optimum = landscape.global_max()?.0;
        let initial = Decisions::from_bits(rng.random::<u64>(), cfg.n_tasks);
        let allocation = initial_allocation(cfg, &mut rng)?;
        let mut state = OrgState::new(&landscape, initial, allocation);
        let params = cfg.round_params();

        let periods = cfg.horizon + 1;
        let mut trace = RunTrace {
            run_index,
            seed: run_seed(cfg.master_seed, &cfg.label, run_index as u64),
            raw: Vec::with_capacity(periods),
            pmax: Vec::with_capacity(periods),
            normalized: Vec::with_capacity(periods),
            events: Vec::new(),
        };
        record(&mut trace, &landscape, &state, optimum);

        for t in 1..=cfg.horizon {
            let realloc_now = cfg.mode == Mode::BottomUp && t % cfg.realloc_interval == 0;
            if realloc_now && cfg.realloc_position == ReallocPosition::BeforeSearch {
                reallocate(&landscape, &mut state, &params, t, record_events, &mut trace, &mut rng)?;
            }
            if cfg.shock_enabled && t == cfg.shock_period + 1 {
                landscape = apply_shock(&landscape, cfg.rho, &mut rng)?;
                let before = optimum;
                optimum = landscape.global_max()?.0;
                if record_events {
                    trace.events.push(Event::Shock {
                        period: t,
                        max_before: before,
                        max_after: optimum,
                    });
                }
            }

            step(&landscape, &mut state, cfg, &mut rng);
            state.period = t;

            if realloc_now && cfg.realloc_position == ReallocPosition::AfterSearch {
                reallocate(&landscape, &mut state, &params, t, record_events, &mut trace, &mut rng)?;
            }
            record(&mut trace, &landscape, &state, optimum);
        }
        Ok(trace)
    }
}

/// Simultaneous search against the frozen previous solution, then learning
/// from the contributions each agent observes in its own area.
fn step<R: Rng + ?Sized>(landscape: &Landscape, state: &mut OrgState, cfg: &ScenarioConfig, rng: &mut R) {
    let mut next = state.current;
    for agent in 0..state.allocation.n_agents() {
        let choice = agent_search_step(landscape, state, agent, cfg.lambda, cfg.search, rng);
        next.overwrite(&choice, state.allocation.area(agent));
    }
    state.previous = state.current;
    state.current = next;
    let observed = landscape.contributions(&next);
    for (agent, beliefs) in state.beliefs.iter_mut().enumerate() {
        beliefs.update(
            state.allocation.area(agent),
            &state.previous,
            &state.current,
            &state.observed,
            &observed,
            cfg.belief_update,
        );
    }
    state.observed = observed;
}

fn reallocate<R: Rng + ?Sized>(
    landscape: &Landscape,
    state: &mut OrgState,
    params: &RoundParams,
    period: usize,
    record_events: bool,
    trace: &mut RunTrace,
    rng: &mut R,
) -> Result<()> {
    let (allocation, log) = reallocation_round(landscape, state, params, rng)?;
    state.allocation = allocation;
    if record_events {
        trace.events.push(Event::Reallocation {
            period,
            log,
            owners: state.allocation.owners().to_vec(),
        });
    }
    Ok(())
}

fn initial_allocation<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Allocation> {
    let sequential = Allocation::top_down(cfg.n_tasks, cfg.n_agents)?;
    if cfg.mode == Mode::TopDown || cfg.bottom_up_start == InitialAllocation::Sequential {
        return Ok(sequential);
    }
    let mut owners = sequential.owners().to_vec();
    owners.shuffle(rng);
    Allocation::from_owners(owners, cfg.n_agents)
}

fn record(trace: &mut RunTrace, landscape: &Landscape, state: &OrgState, optimum: f64) {
    let raw = landscape.total_performance(&state.current);
    trace.raw.push(raw);
    trace.pmax.push(optimum);
    trace.normalized.push(raw / optimum);
}

/// Builds the scenario and simulates one run of it.
pub fn simulate_run(config: &ScenarioConfig, run_index: usize) -> Result<RunTrace> {
    Scenario::new(config.clone())?.run(run_index, false)
}
