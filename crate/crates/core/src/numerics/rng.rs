use rand_core::Rng;
use rand_pcg::Pcg64;

/// PCG stream constant recommended by the PCG reference implementation.
const PCG_DEFAULT_STREAM: u128 = 0x0a02_bdbf_7bb3_c0a7_ac28_fa16_a64a_bf96;

/// Mixing constant applied to per-item seed derivation (the 64-bit golden ratio).
const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Deterministic random source shared by every stochastic step of the toolkit.
///
/// The generator is PCG64 (128-bit LCG with XSL-RR output), constructed as
/// `pcg64(state = seed, stream = 0xa02bdbf7bb3c0a7ac28fa16a64abf96)`. On top of
/// the raw `u64` stream:
///
/// * `uniform()` is `(next_u64() >> 11) · 2⁻⁵³`, in `[0, 1)`;
/// * `normal()` is Box–Muller over two uniforms `u1, u2`:
///   `sqrt(-2 ln(1 - u1)) · cos(2π u2)`, one draw per call;
/// * `below(n)` uses Lemire's widening multiply with rejection;
/// * `shuffle` is a Fisher–Yates pass from the last element down.
///
/// One generator belongs to one worker; derive independent generators with
/// [`SeededRng::derive`] instead of sharing.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    inner: Pcg64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            seed,
            inner: Pcg64::new(u128::from(seed), PCG_DEFAULT_STREAM),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Seed for the `index`-th item of a collection generated from `seed`:
    /// `seed XOR (index · 0x9e3779b97f4a7c15)`.
    pub fn derive_seed(seed: u64, index: u64) -> u64 {
        seed ^ index.wrapping_mul(GOLDEN_GAMMA)
    }

    pub fn derive(&self, index: u64) -> SeededRng {
        SeededRng::new(Self::derive_seed(self.seed, index))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in `0..n`. Panics when `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let threshold = n.wrapping_neg() % n;
        loop {
            let wide = u128::from(self.next_u64()) * u128::from(n);
            if (wide as u64) >= threshold {
                return (wide >> 64) as u64;
            }
        }
    }

    /// Inclusive integer range.
    pub fn range_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        assert!(lo <= hi);
        lo + self.below((hi - lo) as u64 + 1) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
