//! Deterministic RNG streams.
//!
//! Every stochastic stage takes an explicit 64-bit seed. Sub-streams (per
//! author, per fold, per epoch) are derived by hashing the parent seed with a
//! label, so adding an author never perturbs another author's stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive a child seed from `seed` and a textual label.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn derived_rng(seed: u64, label: &str) -> Rng {
    rng(derive_seed(seed, label))
}
