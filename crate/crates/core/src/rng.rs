//! Reproducible random number streams.
//!
//! Every source of randomness in this crate is an [`RngStream`]: a ChaCha8
//! generator addressed by a `(seed, stream_id)` pair. Identical pairs produce
//! identical draw sequences on every platform, and child streams are derived
//! by mixing a tag into the stream id rather than by splitting generator
//! state, so reproducibility is independent of the order in which streams are
//! consumed (or of any parallel schedule).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer, used to spread structured tags over the id space.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fold a sequence of tag components into a single stream id.
pub fn mix_tags(parts: &[u64]) -> u64 {
    let mut acc = 0x243f_6a88_85a3_08d3u64; // arbitrary non-zero start
    for &p in parts {
        acc = splitmix64(acc ^ splitmix64(p));
    }
    acc
}

/// A seeded, stream-addressed random number generator.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream with the same seed and an id derived from this stream's
    /// id and `tag`. Derivation looks only at ids, never at generator
    /// position, so the same tag always yields the same child.
    pub fn derive(&self, tag: u64) -> RngStream {
        RngStream::new(self.seed, mix_tags(&[self.stream_id, tag]))
    }

    /// As [`derive`](Self::derive) but with a structured tag.
    pub fn derive_tagged(&self, parts: &[u64]) -> RngStream {
        RngStream::new(self.seed, mix_tags(&[&[self.stream_id], parts].concat()))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}
