//! Seedable, platform-independent random streams.
//!
//! Every stream is a ChaCha8 generator. Child streams are keyed by the
//! SHA-256 digest of `(tag, parent seed, index)`, so datasets reproduce
//! regardless of thread count or machine.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Human-readable description recorded in dataset manifests.
pub const RNG_ALGORITHM: &str =
    "ChaCha8 (rand_chacha 0.9); child seed = SHA-256(tag || parent_le || index_le)[0..8] little-endian";

pub fn derive_seed(parent: u64, tag: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(tag.as_bytes());
    h.update(parent.to_le_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn child_stream(parent: u64, tag: &str, index: u64) -> StreamRng {
    stream(derive_seed(parent, tag, index))
}
