//! SHA-256 helpers and seeded randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type Hash256 = [u8; 32];

pub fn sha256(data: &[u8]) -> Hash256 {
    Sha256::digest(data).into()
}

/// Hashes the concatenation of `parts` without allocating the joined buffer.
pub fn sha256_concat(parts: &[&[u8]]) -> Hash256 {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part);
    }
    hasher.finalize().into()
}

pub fn double_sha256(data: &[u8]) -> Hash256 {
    sha256(&sha256(data))
}

/// Deterministic generator for a caller-supplied seed of any length.
///
/// The seed is compressed with SHA-256 so that short seeds such as `[1]`
/// and long transcripts both yield well-spread ChaCha20 keys.
pub fn seeded_rng(seed: &[u8]) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(sha256(seed))
}

/// Derives a child seed from a parent seed and a label.
pub fn derive_seed(parent: &[u8], label: &[u8]) -> Hash256 {
    sha256_concat(&[b"fogtrace/seed", &(parent.len() as u64).to_be_bytes(), parent, label])
}
