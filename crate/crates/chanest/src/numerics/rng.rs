//! Deterministic random streams.
//!
//! Every random draw in the simulator comes from an `RngStream`, a ChaCha
//! generator addressed by `(seed, stream_id)`. Callers derive one stream per
//! logical purpose (a frame's channel draw, a frame's noise, a shuffle), so
//! results are independent of thread count and evaluation order.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::real::Real;

/// Seeded, stream-addressed generator with a reproducible draw sequence for
/// every `(seed, stream_id)` pair.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on (0, 1]; safe as a logarithm argument.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n). The modulo bias (< 2⁻⁵³ for any n used
    /// here) is irrelevant for shuffles and index draws.
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        self.next_u64() % n
    }

    /// n random bits as 0/1 bytes.
    pub fn bits(&mut self, n: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(n);
        let mut word = 0u64;
        for i in 0..n {
            if i % 64 == 0 {
                word = self.next_u64();
            }
            out.push((word & 1) as u8);
            word >>= 1;
        }
        out
    }

    /// Fisher–Yates shuffle of an index slice.
    pub fn shuffle(&mut self, idx: &mut [usize]) {
        for i in (1..idx.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            idx.swap(i, j);
        }
    }
}

/// Two independent standard normal samples via the Box–Muller transform.
///
/// The transform is evaluated in `f64` and converted, so `f32` streams see
/// the correctly rounded double-precision value.
pub fn gaussian_pair<T: Real>(rng: &mut RngStream) -> (T, T) {
    let u1 = rng.uniform_open();
    let u2 = rng.uniform();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    (T::of(r * theta.cos()), T::of(r * theta.sin()))
}
