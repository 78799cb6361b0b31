//! Seeded random streams.
//!
//! Every random decision in the pipeline draws from a ChaCha8 generator keyed
//! by the run seed and a purpose-specific stream id, so adding randomness to
//! one stage never shifts the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DOWNSAMPLE: u64 = 1;
pub const SPLIT: u64 = 2;
pub const ENCODER_INIT: u64 = 3;
pub const DETECTOR: u64 = 4;
/// Corruption for epoch `t` uses stream `CORRUPTION_BASE + t`.
pub const CORRUPTION_BASE: u64 = 1 << 32;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
