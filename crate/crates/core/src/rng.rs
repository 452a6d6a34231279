//! Counter-based random streams.
//!
//! A stream is identified by `(master seed, purpose, index)`. The seed and the
//! purpose select a ChaCha8 key, the index selects the 64-bit ChaCha stream
//! and the word position plays the role of the counter. Draws are therefore a
//! pure function of the stream id and of how many words were consumed, no
//! matter which worker thread owns the stream.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// What a stream is used for. Distinct purposes never share a key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u16)]
pub enum Purpose {
    Path = 1,
    LoopFreePath = 2,
    CoupledPath = 3,
    IndependentCopy = 4,
    Escape = 5,
    Occupation = 6,
    Bootstrap = 7,
    Synthetic = 8,
    Increments = 9,
    RandomSets = 10,
    Test = 11,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamId {
    pub purpose: Purpose,
    pub index: u64,
}

impl StreamId {
    pub fn new(purpose: Purpose, index: u64) -> Self {
        StreamId { purpose, index }
    }
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    id: StreamId,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, id: StreamId) -> Self {
        let mut state = seed ^ ((id.purpose as u64) << 48).rotate_left(7);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(id.index);
        RngStream { seed, id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Uniform draw on `(0, 1]` with 53 random bits.
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` by rejection (exact).
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let zone = u64::MAX - (u64::MAX % n) - 1;
        loop {
            let v = self.inner.next_u64();
            if v <= zone {
                return v % n;
            }
        }
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_pure_functions_of_their_id() {
        let id = StreamId::new(Purpose::Path, 17);
        let mut a = RngStream::new(42, id);
        let mut b = RngStream::new(42, id);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
        assert_eq!(a.counter(), 16);
    }

    #[test]
    fn distinct_ids_give_distinct_streams() {
        let mut a = RngStream::new(42, StreamId::new(Purpose::Path, 0));
        let mut b = RngStream::new(42, StreamId::new(Purpose::Path, 1));
        let mut c = RngStream::new(42, StreamId::new(Purpose::Escape, 0));
        let mut e = RngStream::new(43, StreamId::new(Purpose::Path, 0));
        let x = a.next_u64();
        assert_ne!(x, b.next_u64());
        assert_ne!(x, c.next_u64());
        assert_ne!(x, e.next_u64());
    }

    #[test]
    fn uniform_ranges() {
        let mut r = RngStream::new(1, StreamId::new(Purpose::Test, 0));
        for _ in 0..10_000 {
            let u = r.uniform_open0();
            assert!(u > 0.0 && u <= 1.0);
            let v = r.uniform();
            assert!((0.0..1.0).contains(&v));
            assert!(r.below(6) < 6);
        }
    }
}
