//! Seed derivation.
//!
//! Every random stream of a realization is keyed by a fixed label, so adding
//! a new consumer never shifts the numbers another consumer sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

/// Hashes `(base, label)` into an independent 64-bit seed.
pub fn derive_seed(base: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Labelled sub-streams of one realization seed.
#[derive(Debug, Clone, Copy)]
pub struct SeedPlan {
    base: u64,
}

impl SeedPlan {
    pub fn new(base: u64) -> Self {
        Self { base }
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn seed(&self, label: &str) -> u64 {
        derive_seed(self.base, label)
    }

    pub fn rng(&self, label: &str) -> SimRng {
        rng_from_seed(self.seed(label))
    }
}
