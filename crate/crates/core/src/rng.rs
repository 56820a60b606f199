//! Seeding policy.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`], which is
//! portable and bit-reproducible across platforms. A run is identified by a
//! 64-bit seed; independent sub-computations (trajectory members, replicas,
//! coarse steps) get their own ChaCha stream of that seed, addressed by
//! [`StreamId`]. Streams of one seed never overlap, so parallelizing over
//! streams does not change results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Address of an independent random stream under one seed.
///
/// Packed into the 64-bit ChaCha stream id as
/// `tag << 56 | a << 36 | b << 16 | c` (tag: 8 bits, a: 20 bits,
/// b: 20 bits, c: 16 bits).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamId {
    pub tag: u8,
    pub a: u32,
    pub b: u32,
    pub c: u16,
}

impl StreamId {
    pub const fn new(tag: u8, a: u32, b: u32, c: u16) -> Self {
        StreamId { tag, a, b, c }
    }

    pub fn packed(self) -> u64 {
        debug_assert!(self.a < (1 << 20) && self.b < (1 << 20));
        ((self.tag as u64) << 56)
            | (((self.a as u64) & 0xF_FFFF) << 36)
            | (((self.b as u64) & 0xF_FFFF) << 16)
            | self.c as u64
    }
}

/// Stream tags used across the crate.
pub mod tags {
    pub const MAIN: u8 = 0;
    pub const CPI_BURST: u8 = 1;
    pub const FINE_RUN: u8 = 2;
    pub const DATASET: u8 = 3;
}

/// The root stream (stream 0) of `seed`.
pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, id: StreamId) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id.packed());
    rng
}
