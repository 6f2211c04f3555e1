//! Reproducible random streams keyed by `(master_seed, stream_index)`.
//!
//! Each stream is a ChaCha8 keystream: the key is derived from the master
//! seed, the 64-bit ChaCha stream id is the stream index and the block
//! counter plays the role of the step index. Streams are therefore pure
//! functions of `(master_seed, stream_index)` and any worker can reproduce
//! any stream without coordination.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub type StreamRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SeedPlan {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedPlan {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self { master_seed, stream_index }
    }

    /// Same master seed, different stream.
    pub fn with_stream(self, stream_index: u64) -> Self {
        Self { stream_index, ..self }
    }

    /// Independent family of streams for a named purpose.
    ///
    /// The lane's master seed is a hash of `(master_seed, lane)`; stream
    /// indices are preserved so `plan.lane(k).with_stream(i)` and
    /// `plan.with_stream(i).lane(k)` agree.
    pub fn lane(self, lane: u64) -> Self {
        let mixed = splitmix64(self.master_seed ^ splitmix64(lane.wrapping_add(0x6c61_6e65)));
        Self { master_seed: mixed, ..self }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Lanes used across the crate, kept in one place so that no two purposes
/// share randomness by accident.
pub mod lanes {
    pub const PATH: u64 = 0;
    pub const SAMPLE_OFFSET: u64 = 1;
    pub const BESSEL_AXIS: [u64; 3] = [10, 11, 12];
    pub const XI_BACKWARD: u64 = 20;
    pub const XI_FORWARD: u64 = 21;
    pub const XI_SHIFT: u64 = 22;
    pub const REFERENCE: u64 = 30;
    pub const REFERENCE_ALT: u64 = 31;
}
