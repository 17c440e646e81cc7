//! Agent-based simulation of organizations that search NK performance
//! landscapes, allocate tasks top-down or bottom-up, and face correlated
//! environmental shocks.

pub mod decisions;
pub mod error;
pub mod experiments;
pub mod landscape;
pub mod organization;
pub mod par;
pub mod reallocation;
pub mod rng;
pub mod simulation;

pub use decisions::Decisions;
pub use error::{Error, Result};
