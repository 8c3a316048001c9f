//! Keyed random streams.
//!
//! Every consumer of randomness gets its own ChaCha20 stream whose 256-bit
//! key is `SHA-256(domain || 0x00 || master_seed_le || id)`. Streams never
//! depend on scheduling order, so any work item can be regenerated alone.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha20Rng;

/// Derives the stream key for `(domain, master_seed, id)`.
pub fn stream_key(domain: &str, master_seed: u64, id: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(domain.as_bytes());
    h.update([0u8]);
    h.update(master_seed.to_le_bytes());
    h.update(id.as_bytes());
    h.finalize().into()
}

pub fn stream(domain: &str, master_seed: u64, id: &str) -> StreamRng {
    ChaCha20Rng::from_seed(stream_key(domain, master_seed, id))
}
