//! Seeded random streams.
//!
//! Every Monte-Carlo unit of work (a coherence block, a packet, a grid
//! point) draws from its own ChaCha stream derived from a master seed and a
//! stream index, so results do not depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Independent stream `stream` of master seed `seed`.
pub fn substream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Packs a two-level index (e.g. grid point, block) into one stream id.
pub fn stream_id(outer: u64, inner: u64) -> u64 {
    (outer << 32) ^ inner
}
