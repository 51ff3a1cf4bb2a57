//! Seeded, stream-separated ChaCha generators.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type HRng = ChaCha20Rng;

/// Independent generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> HRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for `(label, index)` pairs so distinct subsystems never share a stream.
pub fn stream_id(label: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

pub fn labeled(seed: u64, label: &str, index: u64) -> HRng {
    stream(seed, stream_id(label, index))
}
