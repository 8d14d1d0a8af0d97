//! Deterministic random streams derived from a run seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags keep streams for different consumers independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Augment,
    Reshuffle,
    Init,
    Batches,
    Dropout,
    Synth,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Generator for `(seed, purpose, id)`; distinct ids give unrelated streams.
pub fn rng_for(seed: u64, stream: Stream, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(stream as u64 + 1)));
    rng.set_stream(id);
    rng
}
