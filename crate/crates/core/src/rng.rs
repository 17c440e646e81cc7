//! Deterministic per-run random streams.
//!
//! Every run draws from its own ChaCha8 stream whose 256-bit key is
//! `SHA-256("orgsim/stream/v1" || master_seed_le || len(scenario)_le ||
//! scenario || run_index_le)`. The derivation is part of the reproducibility
//! contract: changing it changes every published number.

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use sha2::{Digest, Sha256};

pub type Stream = ChaCha8Rng;

const DOMAIN: &[u8] = b"orgsim/stream/v1";

/// The 32-byte key of the stream for `(master_seed, scenario, run_index)`.
pub fn stream_key(master_seed: u64, scenario: &str, run_index: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(DOMAIN);
    hasher.update(master_seed.to_le_bytes());
    hasher.update((scenario.len() as u64).to_le_bytes());
    hasher.update(scenario.as_bytes());
    hasher.update(run_index.to_le_bytes());
    hasher.finalize().into()
}

/// A short public identifier of a run's stream: the first 8 key bytes.
pub fn run_seed(master_seed: u64, scenario: &str, run_index: u64) -> u64 {
    let key = stream_key(master_seed, scenario, run_index);
    u64::from_le_bytes(key[..8].try_into().expect("8 bytes"))
}

pub fn derive_stream(master_seed: u64, scenario: &str, run_index: u64) -> Stream {
    ChaCha8Rng::from_seed(stream_key(master_seed, scenario, run_index))
}
