//! Seeded random streams. Every stochastic constructor in the crate goes
//! through here so results are pure functions of their seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator name recorded next to seeds in output artifacts.
pub const GENERATOR: &str = "chacha8";

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent sub-stream `stream` of `seed`, for parallel fan-out.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
