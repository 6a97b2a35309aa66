//! Seedable, portable random number generation.
//!
//! All randomness in the crate flows through [`PortableRng`], a ChaCha8
//! stream with explicit uniform and normal draws so that a given seed
//! produces the same sequence on every platform. Each normal draw consumes
//! exactly two 64-bit outputs (Box-Muller, no caching).

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::scalar::Scalar;

/// Deterministic random source (ChaCha8 keyed by a 64-bit seed).
#[derive(Debug, Clone)]
pub struct PortableRng {
    inner: ChaCha8Rng,
}

impl PortableRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)` using the top 53 bits.
    pub fn uniform_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `(0, 1]`, safe as a logarithm argument.
    fn uniform_open_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw (Box-Muller; two 64-bit outputs per call).
    pub fn normal_f64(&mut self) -> f64 {
        let u1 = self.uniform_open_f64();
        let u2 = self.uniform_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn uniform<T: Scalar>(&mut self) -> T {
        T::cst(self.uniform_f64())
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform_in<T: Scalar>(&mut self, lo: T, hi: T) -> T {
        lo + (hi - lo) * T::cst(self.uniform_f64())
    }

    pub fn normal<T: Scalar>(&mut self) -> T {
        T::cst(self.normal_f64())
    }
}

/// Derives an independent per-trial seed from a base seed by counter
/// splitting (SplitMix64 finalizer over `base + trial`).
pub fn derive_seed(base: u64, trial: u64) -> u64 {
    let mut z = base
        .wrapping_add(trial.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
