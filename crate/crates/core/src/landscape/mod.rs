//! NK performance landscapes.
//!
//! Each task `i` owns a lookup table with `2^(1 + K_i)` entries. The table is
//! indexed by the bit tuple `(d_i, d_j1, d_j2, ...)` where `j1 < j2 < ...` are
//! the task's dependencies; the own bit is the most significant.

mod pattern;
mod shock;

use std::sync::Arc;

use rand::{Rng, RngExt};

use crate::decisions::Decisions;
use crate::error::{Error, Result};

pub use pattern::{build_pattern, InteractionPattern, PatternKind};
pub use shock::{apply_shock, beta_shape, correlated_value, ShockSample};

/// Largest landscape [`Landscape::global_max`] will scan exhaustively.
pub const GLOBAL_MAX_TASK_LIMIT: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pattern: Arc<InteractionPattern>,
    tables: Vec<Vec<f64>>,
}

impl Landscape {
    /// Draws every table entry independently from U(0,1).
    pub fn generate<R: Rng + ?Sized>(pattern: Arc<InteractionPattern>, rng: &mut R) -> Self {
        let tables = (0..pattern.n_tasks())
            .map(|i| (0..1usize << (pattern.k(i) + 1)).map(|_| rng.random::<f64>()).collect())
            .collect();
        Landscape { pattern, tables }
    }

    /// Builds a landscape from explicit tables. Values must lie in [0,1] and
    /// each table must have `2^(1+K_i)` entries.
    pub fn from_tables(pattern: Arc<InteractionPattern>, tables: Vec<Vec<f64>>) -> Result<Self> {
        if tables.len() != pattern.n_tasks() {
            return Err(Error::LengthMismatch {
                expected: pattern.n_tasks(),
                got: tables.len(),
            });
        }
        for (i, table) in tables.iter().enumerate() {
            let expected = 1usize << (pattern.k(i) + 1);
            if table.len() != expected {
                return Err(Error::MalformedPattern(format!(
                    "table {i} has {} entries, its row needs {expected}",
                    table.len()
                )));
            }
            if let Some(v) = table.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::MalformedPattern(format!(
                    "table {i} holds {v}, outside [0,1]"
                )));
            }
        }
        Ok(Landscape { pattern, tables })
    }

    pub(crate) fn with_tables(&self, tables: Vec<Vec<f64>>) -> Self {
        Landscape {
            pattern: Arc::clone(&self.pattern),
            tables,
        }
    }

    pub fn pattern(&self) -> &InteractionPattern {
        &self.pattern
    }

    pub fn shared_pattern(&self) -> &Arc<InteractionPattern> {
        &self.pattern
    }

    pub fn n_tasks(&self) -> usize {
        self.pattern.n_tasks()
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    /// Table position addressed by `config` for task `i`.
    #[inline]
    fn table_index(&self, config: &Decisions, i: usize) -> usize {
        let mut index = config.bit(i);
        for &j in self.pattern.dependencies(i) {
            index = (index << 1) | config.bit(j);
        }
        index
    }

    /// Unchecked contribution lookup.
    #[inline]
    pub(crate) fn contribution_at(&self, config: &Decisions, i: usize) -> f64 {
        self.tables[i][self.table_index(config, i)]
    }

    pub fn contribution(&self, config: &Decisions, i: usize) -> Result<f64> {
        self.check_len(config)?;
        if i >= self.n_tasks() {
            return Err(Error::TaskIndex {
                index: i,
                n_tasks: self.n_tasks(),
            });
        }
        Ok(self.contribution_at(config, i))
    }

    /// Every task's contribution under `config`.
    pub fn contributions(&self, config: &Decisions) -> Vec<f64> {
        (0..self.n_tasks())
            .map(|i| self.contribution_at(config, i))
            .collect()
    }

    /// Mean contribution over `subset`, or over all tasks when `None`.
    pub fn performance(&self, config: &Decisions, subset: Option<&[usize]>) -> Result<f64> {
        self.check_len(config)?;
        match subset {
            None => Ok(self.total_performance(config)),
            Some([]) => Err(Error::EmptySubset),
            Some(tasks) => {
                if let Some(&bad) = tasks.iter().find(|&&t| t >= self.n_tasks()) {
                    return Err(Error::TaskIndex {
                        index: bad,
                        n_tasks: self.n_tasks(),
                    });
                }
                Ok(self.partial_performance(config, tasks))
            }
        }
    }

    #[inline]
    pub(crate) fn partial_performance(&self, config: &Decisions, tasks: &[usize]) -> f64 {
        debug_assert!(!tasks.is_empty());
        let sum: f64 = tasks.iter().map(|&t| self.contribution_at(config, t)).sum();
        sum / tasks.len() as f64
    }

    pub(crate) fn total_performance(&self, config: &Decisions) -> f64 {
        let n = self.n_tasks();
        let sum: f64 = (0..n).map(|i| self.contribution_at(config, i)).sum();
        sum / n as f64
    }

    /// Exact maximum of performance over all `2^N` configurations.
    ///
    /// Walks the configurations in Gray-code order so each step only
    /// recomputes the contributions that read the flipped bit. The sum is
    /// re-accumulated in task order every step, so the returned value is
    /// bit-identical to `performance` of the returned configuration.
    pub fn global_max(&self) -> Result<(f64, Decisions)> {
        let n = self.n_tasks();
        if n > GLOBAL_MAX_TASK_LIMIT {
            return Err(Error::TooManyTasks {
                n_tasks: n,
                limit: GLOBAL_MAX_TASK_LIMIT,
            });
        }
        let mut config = Decisions::zeros(n);
        let mut contributions = self.contributions(&config);
        let mut best = contributions.iter().sum::<f64>() / n as f64;
        let mut best_config = config;
        for step in 1u64..(1u64 << n) {
            let bit = step.trailing_zeros() as usize;
            config.flip(bit);
            for &i in self.pattern.readers(bit) {
                contributions[i] = self.contribution_at(&config, i);
            }
            let value = contributions.iter().sum::<f64>() / n as f64;
            if value > best {
                best = value;
                best_config = config;
            }
        }
        Ok((best, best_config))
    }

    fn check_len(&self, config: &Decisions) -> Result<()> {
        if config.len() != self.n_tasks() {
            return Err(Error::LengthMismatch {
                expected: self.n_tasks(),
                got: config.len(),
            });
        }
        Ok(())
    }
}
