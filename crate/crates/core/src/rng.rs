//! Splittable random streams.
//!
//! Every stochastic operation takes an explicit [`RngStream`]. Streams are
//! identified by a 64-bit key; [`RngStream::split`] derives a child key from
//! the parent key and a label without consuming any draws, so the tree of
//! streams used by a run is a pure function of the root seed.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct RngStream {
    key: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        let key = splitmix64(seed);
        Self {
            key,
            rng: ChaCha8Rng::seed_from_u64(key),
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Independent child stream. Does not advance `self`.
    pub fn split(&self, label: u64) -> Self {
        let key = splitmix64(self.key ^ splitmix64(label.wrapping_add(0xA076_1D64_78BD_642F)));
        Self {
            key,
            rng: ChaCha8Rng::seed_from_u64(key),
        }
    }

    /// Child stream labelled by a string.
    pub fn split_named(&self, label: &str) -> Self {
        // FNV-1a; stable across platforms and releases.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        self.split(h)
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        self.shuffle(&mut idx);
        idx
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_does_not_consume_parent() {
        let a = RngStream::new(7);
        let mut b = a.clone();
        let _child = b.split(3);
        let mut a2 = a.clone();
        assert_eq!(a2.next_u64(), b.next_u64());
    }

    #[test]
    fn children_differ_by_label() {
        let root = RngStream::new(1);
        let mut x = root.split(0);
        let mut y = root.split(1);
        assert_ne!(x.next_u64(), y.next_u64());
        assert_eq!(root.split_named("gen").key(), root.split_named("gen").key());
    }
}
