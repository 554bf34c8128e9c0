//! Counter-based random streams.
//!
//! Every Poisson stream of a graphical sample is generated from a key
//! derived from `(seed, stream, block)`, so any stretch of any stream can be
//! regenerated on demand without touching the others. Output word `i` of a
//! keyed generator is `mix64(key + i * GOLDEN)`, i.e. SplitMix64 evaluated at
//! an arbitrary counter.

use rand_distr::{Distribution, Exp1};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 / Stafford variant 13 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for replica `index` of a master seed.
///
/// Seed lineage is master -> replica (or batch) -> stream; each level goes
/// through this function with a distinct index space.
#[inline]
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(0x6a09_e667_f3bc_c909)))
}

/// Combines a stream key and a block index into a block key.
#[inline]
pub(crate) fn block_key(stream_key: u64, block: i64) -> u64 {
    mix64(stream_key ^ mix64((block as u64).wrapping_mul(GOLDEN) ^ 0x3c6e_f372_fe94_f82b))
}

/// A keyed generator: output `i` depends only on `(key, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    /// Position of the generator, for resuming a stream later.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn at(key: u64, counter: u64) -> Self {
        Self { key, counter }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponential variate with the given rate (`rate > 0`).
    #[inline]
    pub fn next_exp(&mut self, rate: f64) -> f64 {
        let e: f64 = Exp1.sample(self);
        e / rate
    }

    /// Uniform index in `0..n` (`n > 0`), by multiply-shift.
    #[inline]
    pub fn next_below(&mut self, n: u64) -> u64 {
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }
}

impl rand_core::RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (CounterRng::next_u64(self) >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        CounterRng::next_u64(self)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        rand_core::impls::fill_bytes_via_next(self, dst)
    }
}
