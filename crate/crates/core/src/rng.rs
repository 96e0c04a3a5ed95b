//! Seeded random streams.
//!
//! Every random choice in the crate draws from a ChaCha stream whose seed is
//! derived from the user's master seed plus a domain tag and key (a label, a
//! sample size and replicate index, ...). Streams are therefore independent
//! of scheduling, and adding a label or replicate never perturbs the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Sub-seed for `(master, domain, key)`.
pub fn derive_seed(master: u64, domain: &str, key: &[u8]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((domain.len() as u64).to_le_bytes());
    h.update(domain.as_bytes());
    h.update(key);
    let digest = h.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(first)
}

pub fn stream(master: u64, domain: &str, key: &[u8]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, domain, key))
}

/// Key bytes for a list of integers.
pub fn int_key(parts: &[u64]) -> Vec<u8> {
    parts.iter().flat_map(|p| p.to_le_bytes()).collect()
}
