//! Seed derivation.
//!
//! Every random stream in a run is derived from one master seed. A stream is
//! named by a tag and a list of indices, e.g. `(ENV, [env_index, episode])`,
//! and its seed is obtained by folding them through SplitMix64. Streams with
//! different paths are statistically independent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Per-environment episode reset seeds during training.
pub const STREAM_ENV_EPISODE: u64 = 1;
/// Per-environment action sampling.
pub const STREAM_ENV_ACTIONS: u64 = 2;
/// Network initialisation.
pub const STREAM_INIT: u64 = 3;
/// Minibatch shuffling.
pub const STREAM_SHUFFLE: u64 = 4;
/// Periodic evaluation episodes.
pub const STREAM_EVAL: u64 = 5;
/// Exploration in value-based training.
pub const STREAM_EXPLORE: u64 = 6;
/// Scenario seeds used when constructing training environments. Workers
/// reseed on every reset, so these only shape the initial warm-up.
pub const STREAM_ENV_BUILD: u64 = 7;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `master`, a stream tag and a path of indices.
pub fn derive_seed(master: u64, stream: u64, path: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ splitmix64(stream));
    for &p in path {
        h = splitmix64(h ^ splitmix64(p.wrapping_add(0x5851_f42d_4c95_7f2d)));
    }
    h
}

pub fn rng_for(master: u64, stream: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_stable_and_path_sensitive() {
        assert_eq!(derive_seed(7, 1, &[0, 1]), derive_seed(7, 1, &[0, 1]));
        assert_ne!(derive_seed(7, 1, &[0, 1]), derive_seed(7, 1, &[1, 0]));
        assert_ne!(derive_seed(7, 1, &[0]), derive_seed(7, 2, &[0]));
        assert_ne!(derive_seed(7, 1, &[0]), derive_seed(8, 1, &[0]));
    }
}
