//! Reproducible sampling.
//!
//! Every seeded draw in the crate goes through [`Sampler`], so results can be
//! reproduced by any implementation of the following scheme:
//!
//! * generator: reference `pcg32` (64-bit LCG state, XSH-RR 32-bit output),
//!   seeded as `pcg32_srandom(seed, 0x0a02bdbf7bb3c0a7)`;
//! * 64-bit word: two consecutive outputs, first one in the high half;
//! * integer in `[0, n)`: Lemire's multiply-high with rejection of the
//!   `(2^64 − n) mod n` low products;
//! * float in `[0, 1)`: top 53 bits of a 64-bit word times `2^-53`;
//! * `k` of `n` without replacement: Floyd's algorithm over `j = n−k+1 ..= n`
//!   drawing `t ∈ [1, j]` and inserting `j` if `t` was already taken,
//!   returned in ascending order.

use std::collections::BTreeSet;

use rand_core::Rng;
use rand_pcg::Pcg32;

use crate::error::{Error, Result};

const STREAM: u64 = 0x0a02_bdbf_7bb3_c0a7;

#[derive(Debug, Clone)]
pub struct Sampler {
    rng: Pcg32,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: Pcg32::new(seed, STREAM) }
    }

    pub fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    pub fn next_u64(&mut self) -> u64 {
        let hi = self.rng.next_u32() as u64;
        let lo = self.rng.next_u32() as u64;
        (hi << 32) | lo
    }

    /// Uniform integer in `[0, n)`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let mut m = self.next_u64() as u128 * n as u128;
        if (m as u64) < n {
            let threshold = n.wrapping_neg() % n;
            while (m as u64) < threshold {
                m = self.next_u64() as u128 * n as u128;
            }
        }
        (m >> 64) as u64
    }

    /// Uniform float in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `k` distinct values from `1..=n`, ascending.
    pub fn sample_without_replacement(&mut self, n: u64, k: u64) -> Result<Vec<u64>> {
        if k > n {
            return Err(Error::Domain(format!("sample of {k} from {n} items")));
        }
        let mut chosen = BTreeSet::new();
        for j in n - k + 1..=n {
            let t = self.below(j) + 1;
            if !chosen.insert(t) {
                chosen.insert(j);
            }
        }
        Ok(chosen.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_pcg32_stream() {
        // pcg32_srandom(42, 54) from the PCG reference demo
        let mut r = Pcg32::new(42, 54);
        let first: Vec<u32> = (0..6).map(|_| r.next_u32()).collect();
        assert_eq!(first, [0xa15c02b7, 0x7b47f409, 0xba1d3330, 0x83d2f293, 0xbfa4784b, 0xcbed606e]);
    }

    #[test]
    fn floyd_full_and_empty() {
        let mut s = Sampler::new(1);
        assert_eq!(s.sample_without_replacement(10, 10).unwrap(), (1..=10).collect::<Vec<_>>());
        assert!(s.sample_without_replacement(10, 0).unwrap().is_empty());
        assert!(s.sample_without_replacement(3, 4).is_err());
    }

    #[test]
    fn deterministic() {
        let a = Sampler::new(9).sample_without_replacement(1000, 50).unwrap();
        let b = Sampler::new(9).sample_without_replacement(1000, 50).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, Sampler::new(10).sample_without_replacement(1000, 50).unwrap());
    }

    #[test]
    fn below_is_roughly_uniform() {
        let mut s = Sampler::new(3);
        let mut counts = [0u32; 6];
        for _ in 0..60_000 {
            counts[s.below(6) as usize] += 1;
        }
        assert!(counts.iter().all(|&c| (9_500..10_500).contains(&c)), "{counts:?}");
        let u = s.uniform();
        assert!((0.0..1.0).contains(&u));
    }
}
