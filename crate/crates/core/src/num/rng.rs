//! Deterministic seeded randomness.
//!
//! Every stochastic choice in the crate (weight init, shuffling, negative
//! label draws, synthetic data) flows through this single-owner generator.
//! The stream is ChaCha8, so an identical seed yields an identical draw
//! sequence across runs and platforms.

use super::matrix::Matrix;
use super::scalar::Scalar;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub struct Rng {
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Rng {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Unbiased uniform integer in `[0, n)` via modulo rejection.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0) is undefined");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// Uniform over `{0..n} \ {excluded}`.
    pub fn choose_excluding(&mut self, n: usize, excluded: usize) -> usize {
        assert!(n >= 2 && excluded < n);
        let v = self.below(n - 1);
        if v >= excluded {
            v + 1
        } else {
            v
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }

    /// Standard normal via Box-Muller; the second draw of each pair is cached.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(v) = self.spare_normal.take() {
            return v;
        }
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Fills `m` with draws uniform in `[-bound, bound)`, row-major order.
    pub fn fill_uniform_signed<S: Scalar>(&mut self, m: &mut Matrix<S>, bound: f64) {
        for v in m.data_mut() {
            *v = S::from_f64_lossy(self.uniform_in(-bound, bound));
        }
    }
}
