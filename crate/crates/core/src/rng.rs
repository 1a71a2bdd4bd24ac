//! Deterministic 64-bit generator used for every stochastic feature.
//!
//! The algorithm is pinned so that seeded outputs (Monte-Carlo estimates,
//! random sampling in the verification suites, golden CSV files) are
//! reproducible everywhere: a splitmix-style state advance by the constant
//! 0x9E3779B97F4A7C15 followed by the murmur-like finalizer
//!
//!   z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!   z ^= z >> 27; z *= 0x94D049BB133111EB;
//!   z ^= z >> 31.
//!
//! Bounded draws use rejection from the low bits, so they are exactly
//! uniform. Sub-generators fork by hashing (seed, index) through the same
//! finalizer.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn mix(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Independent stream for task `index` under the same master seed.
    pub fn fork(seed: u64, index: u64) -> Self {
        SplitMix64::new(mix(seed ^ mix(index.wrapping_add(GOLDEN))))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform draw from [0, n) by bit-mask rejection; exact, no modulo bias.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        if n == 1 {
            return 0;
        }
        let mask = u64::MAX >> (n - 1).leading_zeros();
        loop {
            let v = self.next_u64() & mask;
            if v < n {
                return v;
            }
        }
    }

    /// Uniform sign, +1 or -1.
    #[inline]
    pub fn next_sign(&mut self) -> i8 {
        if self.next_u64() & 1 == 0 {
            1
        } else {
            -1
        }
    }

    /// Fill `bits` bits of a word buffer uniformly.
    pub fn fill_bits(&mut self, words: &mut [u64], bits: usize) {
        for (i, w) in words.iter_mut().enumerate() {
            let lo = i * 64;
            if lo >= bits {
                *w = 0;
            } else {
                let take = (bits - lo).min(64);
                let mask = if take == 64 { !0 } else { (1u64 << take) - 1 };
                *w = self.next_u64() & mask;
            }
        }
    }
}

/// Stateless uniform column draw for the hash-keyed extension policy: the
/// choice depends only on (seed, tower, level), so re-resolving the same
/// crossing is idempotent. Rejection keeps it exactly uniform over {0,1,2}.
pub fn hash_column(seed: u64, tower: u32, level: u64) -> u32 {
    let mut x = mix(seed ^ mix(u64::from(tower).wrapping_add(GOLDEN)) ^ mix(level ^ 0x5851_F42D_4C95_7F2D));
    loop {
        let v = x & 3;
        if v < 3 {
            return v as u32;
        }
        x = mix(x.wrapping_add(GOLDEN));
    }
}
