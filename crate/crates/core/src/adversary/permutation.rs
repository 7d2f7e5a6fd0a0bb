//! Keyed pseudo-random permutations of `0..n` for huge `n`.

use crate::seed::mix64;

/// A balanced Feistel network on the smallest even-bit domain covering `n`,
/// restricted to `0..n` by cycle walking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeistelPermutation {
    n: u64,
    half_bits: u32,
    key: u64,
}

const ROUNDS: u64 = 4;

impl FeistelPermutation {
    pub fn new(n: u64, key: u64) -> Self {
        assert!(n >= 1, "permutation domain must be nonempty");
        let mut half_bits = 1;
        while half_bits < 32 && (1u64 << (2 * half_bits)) < n {
            half_bits += 1;
        }
        FeistelPermutation { n, half_bits, key }
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn mask(&self) -> u64 {
        (1u64 << self.half_bits) - 1
    }

    fn round(&self, r: u64, i: u64) -> u64 {
        mix64(self.key ^ mix64(r ^ (i << 58))) & self.mask()
    }

    fn encrypt(&self, x: u64) -> u64 {
        let h = self.half_bits;
        let (mut l, mut r) = (x >> h, x & self.mask());
        for i in 0..ROUNDS {
            let next = l ^ self.round(r, i);
            l = r;
            r = next;
        }
        (l << h) | r
    }

    pub fn apply(&self, x: u64) -> u64 {
        debug_assert!(x < self.n);
        let mut y = self.encrypt(x);
        while y >= self.n {
            y = self.encrypt(y);
        }
        y
    }
}
