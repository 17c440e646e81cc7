use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{n_agents} agents do not evenly divide {n_tasks} tasks")]
    Divisibility { n_tasks: usize, n_agents: usize },

    #[error("malformed interaction pattern: {0}")]
    MalformedPattern(String),

    #[error("task index {index} out of range for {n_tasks} tasks")]
    TaskIndex { index: usize, n_tasks: usize },

    #[error("decision vector has {got} entries, landscape has {expected} tasks")]
    LengthMismatch { expected: usize, got: usize },

    #[error("performance requested over an empty task subset")]
    EmptySubset,

    #[error("shock correlation rho = {0} is outside the open interval (-1, 1)")]
    RhoOutOfDomain(f64),

    #[error("{n_tasks} tasks exceed the limit of {limit}")]
    TooManyTasks { n_tasks: usize, limit: usize },

    #[error("belief about task {0} depending on itself is undefined")]
    SelfPair(usize),

    #[error("agent {agent} has an empty residual area")]
    EmptyResidual { agent: usize },

    #[error("agent {agent} does not own task {task}")]
    NotOwned { task: usize, agent: usize },

    #[error("agent {agent} owns {owned} tasks, outside the capacity range 1..={capacity}")]
    Capacity {
        agent: usize,
        owned: usize,
        capacity: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Results { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
