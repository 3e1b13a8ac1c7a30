//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha stream selected by a
//! single 64-bit seed plus a counter identifying the consumer (scale index,
//! sample index, …). Parallel evaluation order therefore cannot change any
//! result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream `counter` of the generator keyed by `seed`.
pub fn stream(seed: u64, counter: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(counter);
    rng
}

/// Stream addressed by a `(major, minor)` counter pair.
pub fn substream(seed: u64, major: u32, minor: u32) -> ChaCha8Rng {
    stream(seed, (u64::from(major) << 32) | u64::from(minor))
}
