//! Reproducible random streams keyed by (seed, pixel, repeat).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent ChaCha8 stream for one (pixel, repeat) pair. The key is the
/// concatenation of the three indices, so streams never depend on the order
/// in which pixels are evaluated.
pub fn stream(seed: u64, pixel: u64, repeat: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&pixel.to_le_bytes());
    key[16..24].copy_from_slice(&repeat.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
