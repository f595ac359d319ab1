//! Seeded random streams.
//!
//! All simulation randomness comes from ChaCha8, whose output for a given
//! `(seed, stream)` pair is fixed by the algorithm and therefore
//! identical on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// The generator for `seed`, on ChaCha stream `stream`.
///
/// Stream 0 drives single-class arrivals and primary arrivals in two-class
/// runs; stream 1 drives secondary arrivals.
pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
