//! Reproducible seed derivation.
//!
//! Every random object is a pure function of a 64-bit seed. Replica `i` of a
//! study with master seed `s` draws from ChaCha stream `i` keyed by `s`, so a
//! replica's randomness does not depend on scheduling or on how many other
//! replicas exist.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seed for replica `index` of a study with the given master seed.
pub fn replica_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// Seed for an independent sub-task (`tag`) of a replica.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
    rng.set_stream(tag.wrapping_add(1));
    rng.next_u64()
}
