//! Reproducible random streams.
//!
//! A [`RandomStream`] is a ChaCha8 keystream whose key is derived from a path
//! of 64-bit labels, e.g. `(seed, replicate, tag, site)`. Splitting never
//! consumes randomness from the parent, so a child stream depends only on its
//! label path. Streams can therefore be created in any order (or on any
//! thread) and still reproduce the same draws.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Labels used to key sub-streams across the crate.
pub mod tag {
    pub const BOUNDARY_ETA: u64 = 0x6574_615f_6264;
    pub const BOUNDARY_ZETA: u64 = 0x7a65_7461_5f62;
    pub const BULK: u64 = 0x6275_6c6b;
    pub const WALK: u64 = 0x7761_6c6b;
    pub const REPLICATE: u64 = 0x7265_706c;
    pub const FRESH: u64 = 0x6672_6573_68;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A splittable, counter-based random stream.
#[derive(Debug, Clone)]
pub struct RandomStream {
    key: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    /// Root stream for a run.
    pub fn new(seed: u64) -> RandomStream {
        RandomStream::from_key(splitmix64(seed ^ 0x6c67_706f_6c79))
    }

    fn from_key(key: u64) -> RandomStream {
        let mut seed = [0u8; 32];
        let mut s = key;
        for chunk in seed.chunks_mut(8) {
            s = splitmix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        RandomStream { key, rng: ChaCha8Rng::from_seed(seed) }
    }

    /// Independent child stream keyed by `label`. Does not advance `self`.
    pub fn split(&self, label: u64) -> RandomStream {
        let k = splitmix64(self.key.rotate_left(17) ^ splitmix64(label.wrapping_add(0x51_7cc1_b727_220a)));
        RandomStream::from_key(k)
    }

    /// Child stream keyed by a path of labels.
    pub fn substream(&self, labels: &[u64]) -> RandomStream {
        labels.iter().fold(self.clone(), |s, &l| s.split(l))
    }

    /// Uniform draw from the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// `true` with probability `p`.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draws() {
        let mut a = RandomStream::new(42);
        let mut b = RandomStream::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn split_is_order_independent() {
        let root = RandomStream::new(7);
        let mut consumed = root.clone();
        consumed.next_u64();
        let mut a = root.substream(&[1, 2, 3]);
        let mut b = consumed.substream(&[1, 2, 3]);
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn distinct_labels_differ() {
        let root = RandomStream::new(7);
        let mut a = root.split(1);
        let mut b = root.split(2);
        let mut c = root.substream(&[1, 0]);
        let x = a.next_u64();
        assert_ne!(x, b.next_u64());
        assert_ne!(x, c.next_u64());
    }

    #[test]
    fn uniform_in_open_interval() {
        let mut s = RandomStream::new(1);
        for _ in 0..10_000 {
            let u = s.uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }
}
