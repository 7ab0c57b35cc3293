//! Labelled deterministic random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream whose key is
//! derived from the master seed and a fixed label, so adding a client never
//! shifts the numbers drawn by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

pub fn stream(master_seed: u64, label: &str) -> SimRng {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(label.as_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

pub fn catalog_stream(master_seed: u64) -> SimRng {
    stream(master_seed, "catalog")
}

pub fn client_stream(master_seed: u64, client: u32) -> SimRng {
    stream(master_seed, &format!("client/{client}"))
}

pub fn permutation_stream(master_seed: u64, client: u32) -> SimRng {
    stream(master_seed, &format!("permutation/{client}"))
}
