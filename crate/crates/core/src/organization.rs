//! Organizational state: who owns which task, what each agent believes about
//! interdependencies, and how agents search and learn.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::decisions::Decisions;
use crate::error::{Error, Result};
use crate::landscape::Landscape;

/// Owner of every task. Agents and tasks are 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    owner: Vec<usize>,
    areas: Vec<Vec<usize>>,
}

impl Allocation {
    pub fn from_owners(owner: Vec<usize>, n_agents: usize) -> Result<Self> {
        let mut areas = vec![Vec::new(); n_agents];
        for (task, &agent) in owner.iter().enumerate() {
            if agent >= n_agents {
                return Err(Error::Config(format!(
                    "task {task} assigned to agent {agent}, only {n_agents} agents exist"
                )));
            }
            areas[agent].push(task);
        }
        Ok(Allocation { owner, areas })
    }

    /// Symmetric sequential allocation: agent 0 owns the first `N/M` tasks,
    /// agent 1 the next `N/M`, and so on.
    pub fn top_down(n_tasks: usize, n_agents: usize) -> Result<Self> {
        if n_agents == 0 || !n_tasks.is_multiple_of(n_agents) {
            return Err(Error::Divisibility { n_tasks, n_agents });
        }
        let per_agent = n_tasks / n_agents;
        Self::from_owners((0..n_tasks).map(|t| t / per_agent).collect(), n_agents)
    }

    pub fn n_agents(&self) -> usize {
        self.areas.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.owner.len()
    }

    pub fn owner(&self, task: usize) -> usize {
        self.owner[task]
    }

    pub fn owners(&self) -> &[usize] {
        &self.owner
    }

    /// Tasks owned by `agent`, ascending.
    pub fn area(&self, agent: usize) -> &[usize] {
        &self.areas[agent]
    }

    /// Tasks not owned by `agent`, ascending.
    pub fn residual(&self, agent: usize) -> Vec<usize> {
        (0..self.n_tasks())
            .filter(|&t| self.owner[t] != agent)
            .collect()
    }

    pub fn owns(&self, agent: usize, task: usize) -> bool {
        self.owner[task] == agent
    }

    pub(crate) fn transfer(&mut self, task: usize, to: usize) {
        let from = self.owner[task];
        if from == to {
            return;
        }
        self.areas[from].retain(|&t| t != task);
        let slot = self.areas[to].partition_point(|&t| t < task);
        self.areas[to].insert(slot, task);
        self.owner[task] = to;
    }

    /// Checks that every agent owns between 1 and `capacity` tasks.
    pub fn check_capacity(&self, capacity: usize) -> Result<()> {
        for (agent, area) in self.areas.iter().enumerate() {
            if area.is_empty() || area.len() > capacity {
                return Err(Error::Capacity {
                    agent,
                    owned: area.len(),
                    capacity,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .areas
            .iter()
            .map(|a| {
                let tasks: Vec<String> = a.iter().map(|t| t.to_string()).collect();
                format!("{{{}}}", tasks.join(","))
            })
            .collect();
        f.write_str(&parts.join(" "))
    }
}

/// How interdependence counts react to an observed change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BeliefUpdate {
    /// Only pairs `(i, j)` whose decision `i` changed are counted.
    #[default]
    PerBit,
    /// Every pair `(i, j)` is counted whenever the whole vector changed.
    Literal,
}

/// Which neighbour an agent evaluates each period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SearchRule {
    /// One own decision, chosen uniformly, is flipped.
    #[default]
    SingleFlip,
    /// The best of all single flips within the own area.
    BestOfNeighborhood,
}

macro_rules! kebab_enum_str {
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

kebab_enum_str!(BeliefUpdate, BeliefUpdate::PerBit => "per-bit", BeliefUpdate::Literal => "literal");
kebab_enum_str!(SearchRule, SearchRule::SingleFlip => "single-flip", SearchRule::BestOfNeighborhood => "best-of-neighborhood");

/// One agent's counts of observed interdependence (`alpha`) and
/// independence (`beta`) between decision `i` and contribution `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeliefState {
    n_tasks: usize,
    alpha: Vec<u32>,
    beta: Vec<u32>,
}

impl BeliefState {
    /// Uninformed prior: every count starts at 1, so every mean is 0.5.
    pub fn new(n_tasks: usize) -> Self {
        BeliefState {
            n_tasks,
            alpha: vec![1; n_tasks * n_tasks],
            beta: vec![1; n_tasks * n_tasks],
        }
    }

    pub fn counts(&self, i: usize, j: usize) -> (u32, u32) {
        let k = i * self.n_tasks + j;
        (self.alpha[k], self.beta[k])
    }

    pub fn set_counts(&mut self, i: usize, j: usize, alpha: u32, beta: u32) {
        assert!(alpha >= 1 && beta >= 1, "counts start at 1");
        let k = i * self.n_tasks + j;
        self.alpha[k] = alpha;
        self.beta[k] = beta;
    }

    /// Believed probability that decision `i` affects contribution `j`.
    pub fn mean(&self, i: usize, j: usize) -> Result<f64> {
        if i == j {
            return Err(Error::SelfPair(i));
        }
        for index in [i, j] {
            if index >= self.n_tasks {
                return Err(Error::TaskIndex {
                    index,
                    n_tasks: self.n_tasks,
                });
            }
        }
        Ok(self.mean_unchecked(i, j))
    }

    #[inline]
    pub(crate) fn mean_unchecked(&self, i: usize, j: usize) -> f64 {
        let (a, b) = self.counts(i, j);
        a as f64 / (a + b) as f64
    }

    /// Updates counts for the contributions of `area` after the organization
    /// moved from `previous` to `current`. `f_previous` and `f_current` are
    /// the contributions observed in the two periods, indexed by task.
    pub fn update(
        &mut self,
        area: &[usize],
        previous: &Decisions,
        current: &Decisions,
        f_previous: &[f64],
        f_current: &[f64],
        rule: BeliefUpdate,
    ) {
        let changed = previous.diff_mask(current);
        if changed == 0 {
            return;
        }
        for &j in area {
            let interdependent = f_current[j] != f_previous[j];
            for i in 0..self.n_tasks {
                if i == j {
                    continue;
                }
                if rule == BeliefUpdate::PerBit && (changed >> i) & 1 == 0 {
                    continue;
                }
                let k = i * self.n_tasks + j;
                if interdependent {
                    self.alpha[k] += 1;
                } else {
                    self.beta[k] += 1;
                }
            }
        }
    }
}

/// Everything that evolves during a run.
#[derive(Debug, Clone)]
pub struct OrgState {
    /// Most recently implemented configuration.
    pub current: Decisions,
    /// Configuration implemented one period earlier.
    pub previous: Decisions,
    pub allocation: Allocation,
    pub beliefs: Vec<BeliefState>,
    /// Contributions observed for `current` under the landscape then in force.
    pub observed: Vec<f64>,
    pub period: usize,
}

impl OrgState {
    pub fn new(landscape: &Landscape, initial: Decisions, allocation: Allocation) -> Self {
        let beliefs = (0..allocation.n_agents())
            .map(|_| BeliefState::new(landscape.n_tasks()))
            .collect();
        OrgState {
            current: initial,
            previous: initial,
            observed: landscape.contributions(&initial),
            allocation,
            beliefs,
            period: 0,
        }
    }
}

/// `lambda * P(own) + (1 - lambda) * P(residual)`. If one side is empty the
/// other side carries the full weight.
#[inline]
pub(crate) fn utility_of(
    landscape: &Landscape,
    own: &[usize],
    residual: &[usize],
    config: &Decisions,
    lambda: f64,
) -> f64 {
    match (own.is_empty(), residual.is_empty()) {
        (false, false) => {
            lambda * landscape.partial_performance(config, own)
                + (1.0 - lambda) * landscape.partial_performance(config, residual)
        }
        (false, true) => landscape.partial_performance(config, own),
        (true, false) => landscape.partial_performance(config, residual),
        (true, true) => 0.0,
    }
}

/// Incentive-weighted utility of `agent` for `config`.
pub fn utility(
    landscape: &Landscape,
    allocation: &Allocation,
    agent: usize,
    config: &Decisions,
    lambda: f64,
) -> Result<f64> {
    let own = allocation.area(agent);
    let residual = allocation.residual(agent);
    if own.is_empty() {
        return Err(Error::Capacity {
            agent,
            owned: 0,
            capacity: allocation.n_tasks(),
        });
    }
    if residual.is_empty() {
        return Err(Error::EmptyResidual { agent });
    }
    Ok(utility_of(landscape, own, &residual, config, lambda))
}

/// One agent's search decision for the coming period.
///
/// The agent evaluates a neighbour of its own bits in `state.current` (the
/// previous period's solution) against the residual bits of that same
/// solution and keeps the status quo unless the neighbour is strictly better.
/// Returns `state.current` with the agent's own bits replaced by its choice.
pub fn agent_search_step<R: Rng + ?Sized>(
    landscape: &Landscape,
    state: &OrgState,
    agent: usize,
    lambda: f64,
    rule: SearchRule,
    rng: &mut R,
) -> Decisions {
    let own = state.allocation.area(agent);
    let residual = state.allocation.residual(agent);
    let status_quo = state.current;
    if own.is_empty() {
        return status_quo;
    }
    let status_utility = utility_of(landscape, own, &residual, &status_quo, lambda);
    match rule {
        SearchRule::SingleFlip => {
            let task = own[rng.random_range(0..own.len())];
            let candidate = status_quo.flipped(task);
            if utility_of(landscape, own, &residual, &candidate, lambda) > status_utility {
                candidate
            } else {
                status_quo
            }
        }
        SearchRule::BestOfNeighborhood => {
            let mut best = status_quo;
            let mut best_utility = status_utility;
            for &task in own {
                let candidate = status_quo.flipped(task);
                let u = utility_of(landscape, own, &residual, &candidate, lambda);
                if u > best_utility {
                    best = candidate;
                    best_utility = u;
                }
            }
            best
        }
    }
}
