//! Stable derivation of per-stage seeds from a global seed.

use sha2::{Digest, Sha256};

/// Seed for a named stage: the first 8 bytes of `SHA-256(seed || name)`.
///
/// Each stage gets an independent stream, so adding a stage leaves the
/// others untouched.
pub fn derive_seed(global: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(global.to_le_bytes());
    h.update(stage.as_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("8 bytes"))
}
