//! Seeded randomness.
//!
//! Every stochastic stage uses ChaCha8 seeded from a `u64`. Stage seeds are
//! derived from a master seed by hashing, so stages can be re-run on their own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for a named stage: the first 8 bytes (little endian) of
/// `SHA-256(master_le_bytes || stage)`.
pub fn derive_seed(master: u64, stage: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(stage.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Lowercase hex of the first 8 bytes of SHA-256 over `data`.
pub fn short_hash(data: &[u8]) -> alloc::string::String {
    use core::fmt::Write;
    let digest = Sha256::digest(data);
    let mut out = alloc::string::String::with_capacity(16);
    for b in &digest[..8] {
        let _ = write!(out, "{b:02x}");
    }
    out
}
