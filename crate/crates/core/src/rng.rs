//! Counter-based random streams.
//!
//! A [`RngStream`] is a ChaCha8 keystream addressed by `(seed, counter)`: the
//! `n`-th draw is always the `n`-th 64-bit word of the keystream for `seed`,
//! regardless of platform or of what happened to other streams. Independent
//! substreams (one per episode, timestep, operator, sample...) are obtained
//! by hashing a parent seed together with integer tags, so work can be split
//! across threads in any order without changing results.
//!
//! Continuous draws:
//! - uniform `[0, 1)`: top 53 bits of a word times `2^-53`;
//! - uniform `(0, 1)`: `(top53 + 0.5) * 2^-53`;
//! - standard normal: inverse CDF of an open uniform, `-sqrt(2) * erfc_inv(2u)`.
//!
//! Every continuous draw consumes exactly one counter step.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use statrs::function::erf::erfc_inv;

/// Domain tags used when deriving substreams.
pub mod domain {
    pub const SCHEDULE: u64 = 0x5343_4845_4455_4c45;
    pub const OPERATOR: u64 = 0x4f50_4552_4154_4f52;
    pub const DATASET: u64 = 0x4441_5441_5345_5400;
    pub const THEORY: u64 = 0x5448_454f_5259_0000;
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
const INV_2_53: f64 = 1.0 / (1u64 << 53) as f64;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a tag path.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix64(seed ^ GOLDEN_GAMMA), |acc, &t| {
        mix64(acc.wrapping_add(GOLDEN_GAMMA) ^ mix64(t.wrapping_add(GOLDEN_GAMMA)))
    })
}

/// Stable 64-bit tag for a string (FNV-1a), used to key substreams by name.
pub fn name_tag(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    counter: u64,
    core: ChaCha8Rng,
}

impl PartialEq for RngStream {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed && self.counter == other.counter
    }
}

impl Eq for RngStream {}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0, core: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Stream positioned after `counter` draws.
    pub fn at(seed: u64, counter: u64) -> Self {
        let mut s = Self::new(seed);
        s.seek(counter);
        s
    }

    /// Fresh stream for `seed` refined by `tags`.
    pub fn substream(seed: u64, tags: &[u64]) -> Self {
        Self::new(derive_seed(seed, tags))
    }

    /// Child stream of this stream's seed. Independent of the current counter.
    pub fn derive(&self, tags: &[u64]) -> Self {
        Self::substream(self.seed, tags)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn seek(&mut self, counter: u64) {
        self.core.set_word_pos(u128::from(counter) * 2);
        self.counter = counter;
    }

    /// Skips `n` draws.
    pub fn advance(&mut self, n: u64) {
        self.seek(self.counter + n);
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        self.core.next_u64()
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * INV_2_53
    }

    /// Uniform on the open interval `(0, 1)`.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * INV_2_53
    }

    /// Uniform on `[lo, hi)` (or exactly `lo` when the interval is empty).
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform index in `0..n`. `n` must be nonzero.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        normal_quantile(self.next_open01())
    }

    #[inline]
    pub fn normal(&mut self, mean: f64, std_dev: f64) -> f64 {
        mean + std_dev * self.standard_normal()
    }

    /// Standard exponential via `-ln(u)`, `u` open uniform.
    #[inline]
    pub fn exponential(&mut self) -> f64 {
        -self.next_open01().ln()
    }
}

/// Inverse CDF of the standard normal distribution.
#[inline]
pub fn normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}
