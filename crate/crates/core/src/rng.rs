//! Counter-keyed random streams.
//!
//! Every random quantity in the crate is drawn from a generator derived from a
//! base seed and a small set of integer keys (replicate, time step, purpose),
//! never from shared mutable state. Replicates can therefore be executed in any
//! order or on any number of threads and still produce identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes `key` into `seed` (SplitMix64 finaliser).
pub fn derive_seed(seed: u64, key: u64) -> u64 {
    let mut z = seed ^ key.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for stream `stream` of `seed`. Distinct streams of the same seed
/// are independent.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Purposes used as the second key when splitting a replicate seed.
pub(crate) mod purpose {
    pub const GRAPH: u64 = 1;
    pub const INIT: u64 = 2;
    pub const SIGNALS: u64 = 3;
}
