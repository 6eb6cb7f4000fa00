//! Seeded random streams.
//!
//! Every stochastic task (a fit start, a study replication, a bootstrap
//! simulation) draws from its own ChaCha stream selected by index, so its
//! output does not depend on scheduling or on other tasks.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator for stream `index` of `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A child seed for stream `index` of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    substream(seed, index).next_u64()
}
