//! Bottom-up task reallocation.
//!
//! A round has three steps. Every agent owning at least two tasks offers the
//! one it values least. Every agent with free capacity signals for every
//! offered task, and the owner signals to retain it. Offers are then resolved
//! in descending order of their strongest signal: each task goes to its best
//! signaler that still has room, unless the owner's retention signal wins.

use std::cmp::Ordering;

use rand::{Rng, RngExt};
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::decisions::Decisions;
use crate::error::{Error, Result};
use crate::landscape::Landscape;
use crate::organization::{utility_of, Allocation, BeliefState, OrgState};

/// Standard deviation of the signal noise (variance 0.01).
pub const DEFAULT_NOISE_SD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundParams {
    /// Weight on utility (1) versus believed coupling (0).
    pub gamma: f64,
    pub lambda: f64,
    pub capacity: usize,
    pub noise_sd: f64,
}

/// Change in `agent`'s utility if it handed `task` to the residual.
pub fn drop_gain(
    landscape: &Landscape,
    allocation: &Allocation,
    agent: usize,
    task: usize,
    config: &Decisions,
    lambda: f64,
) -> Result<f64> {
    if !allocation.owns(agent, task) {
        return Err(Error::NotOwned { task, agent });
    }
    Ok(drop_gain_unchecked(landscape, allocation, agent, task, config, lambda))
}

fn drop_gain_unchecked(
    landscape: &Landscape,
    allocation: &Allocation,
    agent: usize,
    task: usize,
    config: &Decisions,
    lambda: f64,
) -> f64 {
    let own = allocation.area(agent);
    let residual = allocation.residual(agent);
    let before = utility_of(landscape, own, &residual, config, lambda);
    let smaller: Vec<usize> = own.iter().copied().filter(|&t| t != task).collect();
    let larger = with_task(&residual, task);
    utility_of(landscape, &smaller, &larger, config, lambda) - before
}

/// Change in `agent`'s utility if it took over `task`, plus the noise draw
/// `epsilon`. For a task the agent already owns this is exactly `epsilon`.
pub fn acquire_gain(
    landscape: &Landscape,
    allocation: &Allocation,
    agent: usize,
    task: usize,
    config: &Decisions,
    lambda: f64,
    epsilon: f64,
) -> f64 {
    if allocation.owns(agent, task) {
        return epsilon;
    }
    let own = allocation.area(agent);
    let residual = allocation.residual(agent);
    let before = utility_of(landscape, own, &residual, config, lambda);
    let larger = with_task(own, task);
    let smaller: Vec<usize> = residual.iter().copied().filter(|&t| t != task).collect();
    utility_of(landscape, &larger, &smaller, config, lambda) - before + epsilon
}

fn with_task(tasks: &[usize], task: usize) -> Vec<usize> {
    let mut out = tasks.to_vec();
    let slot = out.partition_point(|&t| t < task);
    out.insert(slot, task);
    out
}

/// Believed coupling between `task` and the tasks of `area` (excluding
/// `task` itself).
pub fn coupling_score(beliefs: &BeliefState, area: &[usize], task: usize) -> f64 {
    area.iter()
        .filter(|&&j| j != task)
        .map(|&j| beliefs.mean_unchecked(task, j))
        .sum()
}

pub fn signal_for_task(gamma: f64, gain: f64, coupling: f64) -> f64 {
    gamma * gain + (1.0 - gamma) * coupling
}

/// The task `agent` offers, or `None` if it owns a single task.
///
/// Minimizes `gamma * (1 - drop_gain) + (1 - gamma) * coupling`; exact ties
/// are broken uniformly at random.
pub fn select_offer<R: Rng + ?Sized>(
    landscape: &Landscape,
    state: &OrgState,
    agent: usize,
    gamma: f64,
    lambda: f64,
    rng: &mut R,
) -> Option<usize> {
    let area = state.allocation.area(agent);
    if area.len() < 2 {
        return None;
    }
    let beliefs = &state.beliefs[agent];
    let scores: Vec<f64> = area
        .iter()
        .map(|&task| {
            let gain = drop_gain_unchecked(landscape, &state.allocation, agent, task, &state.current, lambda);
            gamma * (1.0 - gain) + (1.0 - gamma) * coupling_score(beliefs, area, task)
        })
        .collect();
    let best = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let tied: Vec<usize> = area
        .iter()
        .zip(&scores)
        .filter(|(_, &s)| s == best)
        .map(|(&t, _)| t)
        .collect();
    Some(pick(&tied, rng))
}

fn pick<R: Rng + ?Sized>(items: &[usize], rng: &mut R) -> usize {
    if items.len() == 1 {
        items[0]
    } else {
        items[rng.random_range(0..items.len())]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Offer {
    pub agent: usize,
    pub task: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Signal {
    pub task: usize,
    pub agent: usize,
    pub epsilon: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Transfer {
    pub task: usize,
    pub from: usize,
    pub to: usize,
}

/// Offers, signals and transfers of one round.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RoundLog {
    pub offers: Vec<Offer>,
    pub signals: Vec<Signal>,
    pub transfers: Vec<Transfer>,
}

// Signals sorted best first, the offer, its top signal and its tie key.
type Ranked = (Vec<(Signal, u64)>, Offer, f64, u64);

/// Runs one reallocation round on `state` and returns the new allocation with
/// the round's log. Gains are evaluated on `state.current`.
pub fn reallocation_round<R: Rng + ?Sized>(
    landscape: &Landscape,
    state: &OrgState,
    params: &RoundParams,
    rng: &mut R,
) -> Result<(Allocation, RoundLog)> {
    let allocation = &state.allocation;
    allocation.check_capacity(params.capacity)?;
    let noise = Normal::new(0.0, params.noise_sd)
        .map_err(|e| Error::Config(format!("signal noise: {e}")))?;
    let n_agents = allocation.n_agents();
    let mut log = RoundLog::default();

    for agent in 0..n_agents {
        if let Some(task) = select_offer(landscape, state, agent, params.gamma, params.lambda, rng) {
            log.offers.push(Offer { agent, task });
        }
    }

    // signals, grouped per offer
    let mut per_offer: Vec<Vec<Signal>> = Vec::with_capacity(log.offers.len());
    for offer in &log.offers {
        let mut signals = Vec::new();
        for agent in 0..n_agents {
            let owned = allocation.area(agent).len();
            let free = (1..params.capacity).contains(&owned);
            if agent != offer.agent && !free {
                continue;
            }
            let epsilon = noise.sample(rng);
            let gain = acquire_gain(
                landscape,
                allocation,
                agent,
                offer.task,
                &state.current,
                params.lambda,
                epsilon,
            );
            let coupling = coupling_score(&state.beliefs[agent], allocation.area(agent), offer.task);
            signals.push(Signal {
                task: offer.task,
                agent,
                epsilon,
                value: signal_for_task(params.gamma, gain, coupling),
            });
        }
        per_offer.push(signals);
    }

    // random tie-break keys: one per offer, one per signal
    let offer_keys: Vec<u64> = (0..per_offer.len()).map(|_| rng.random()).collect();
    let mut ranked: Vec<Ranked> = per_offer
        .into_iter()
        .zip(&log.offers)
        .zip(offer_keys)
        .map(|((signals, &offer), key)| {
            let mut keyed: Vec<(Signal, u64)> = signals.into_iter().map(|s| (s, rng.random())).collect();
            keyed.sort_by(|a, b| descending(a.0.value, a.1, b.0.value, b.1));
            let top = keyed.first().map_or(f64::NEG_INFINITY, |s| s.0.value);
            (keyed, offer, top, key)
        })
        .collect();
    ranked.sort_by(|a, b| descending(a.2, a.3, b.2, b.3));

    let mut next = allocation.clone();
    for (signals, offer, _, _) in &ranked {
        for (signal, _) in signals {
            if signal.agent == offer.agent {
                break;
            }
            if next.area(signal.agent).len() < params.capacity {
                next.transfer(offer.task, signal.agent);
                log.transfers.push(Transfer {
                    task: offer.task,
                    from: offer.agent,
                    to: signal.agent,
                });
                break;
            }
        }
    }
    for signals in ranked.into_iter().map(|r| r.0) {
        log.signals.extend(signals.into_iter().map(|s| s.0));
    }
    Ok((next, log))
}

fn descending(a: f64, a_key: u64, b: f64, b_key: u64) -> Ordering {
    b.total_cmp(&a).then(a_key.cmp(&b_key))
}
