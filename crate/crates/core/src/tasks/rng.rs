//! Portable seeded random source.
//!
//! PCG-XSH-RR 64/32 (`rand_pcg::Lcg64Xsh32`) with state = seed and a fixed
//! stream constant. A 64-bit draw is two 32-bit outputs, low word first; a
//! unit float is the top 53 bits of that draw times 2^-53. Any
//! implementation of those three rules reproduces every sequence here.

use rand_core::RngCore;
use rand_pcg::Lcg64Xsh32;

/// PCG stream selector shared by every generator in the crate.
pub const STREAM: u64 = 0x5eed_5eed_5eed_5eed;

pub struct SeededRng {
    inner: Lcg64Xsh32,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Lcg64Xsh32::new(seed, STREAM),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[0, n)` by rejection.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n) - 1;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return (v % n) as usize;
            }
        }
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<u64> = {
            let mut r = SeededRng::new(42);
            (0..8).map(|_| r.next_u64()).collect()
        };
        let mut r = SeededRng::new(42);
        let b: Vec<u64> = (0..8).map(|_| r.next_u64()).collect();
        assert_eq!(a, b);
        let mut r = SeededRng::new(43);
        assert_ne!(a[0], r.next_u64());
    }

    #[test]
    fn unit_floats_in_range() {
        let mut r = SeededRng::new(7);
        for _ in 0..10_000 {
            let v = r.next_f64();
            assert!((0.0..1.0).contains(&v));
        }
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut v: Vec<usize> = (0..100).collect();
        SeededRng::new(3).shuffle(&mut v);
        let mut s = v.clone();
        s.sort();
        assert_eq!(s, (0..100).collect::<Vec<_>>());
        assert_ne!(v, s);
    }
}
