//! Seed derivation for reproducible runs.
//!
//! All stochastic choices in a scenario flow from a single root seed. Each
//! subsystem draws from its own derived stream so that, e.g., changing the
//! traffic volume does not perturb the failure schedule.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes a root seed, a stream label, and a salt into a child seed.
///
/// splitmix64-style finalization; stable across platforms.
pub fn derive_seed(root: u64, stream: &str, salt: u64) -> u64 {
    let mut h = root ^ 0x9e37_79b9_7f4a_7c15;
    for &b in stream.as_bytes() {
        h = h.wrapping_add(b as u64);
        h = mix(h);
    }
    mix(h.wrapping_add(salt))
}

/// Deterministic RNG for a derived stream.
pub fn derive_rng(root: u64, stream: &str, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, stream, salt))
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
