//! Seed derivation for named random substreams.
//!
//! Every randomized component (layout, environment, agent, sampling)
//! draws from its own stream derived from one root seed, so a component
//! can be reproduced in isolation without replaying the others.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a over the stream name; stable across platforms and releases.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a substream seed from a root seed and a stream name.
pub fn derive_seed(root: u64, name: &str) -> u64 {
    splitmix64(root ^ fnv1a(name.as_bytes()))
}

/// Derive a substream seed carrying an index (per-env, per-graph, ...).
pub fn derive_seed_indexed(root: u64, name: &str, index: u64) -> u64 {
    splitmix64(derive_seed(root, name) ^ splitmix64(index))
}

/// RNG for a named substream.
pub fn substream(root: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, name))
}

/// RNG for a named, indexed substream.
pub fn substream_indexed(root: u64, name: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed_indexed(root, name, index))
}
