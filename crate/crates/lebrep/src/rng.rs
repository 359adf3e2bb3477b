//! Counter-based Gaussian stream keyed on `(seed, path, step)`.
//!
//! Each path owns an independent ChaCha8 stream (`set_stream(path)`), and
//! every step consumes exactly two 64-bit words, so the normal draw for
//! `(seed, path, step)` is a pure function of the key — independent of how
//! paths are partitioned across workers, and addressable out of order via
//! the cipher's random-access counter.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Words (32-bit) consumed per Gaussian draw: two u64.
const WORDS_PER_STEP: u128 = 4;

/// Gaussian stream for a single path.
pub struct PathRng {
    rng: ChaCha8Rng,
}

impl PathRng {
    pub fn new(seed: u64, path: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path);
        Self { rng }
    }

    /// Standard normal draw for the next step (sequential access).
    pub fn next_normal(&mut self) -> f64 {
        let u1 = uniform_open(self.rng.next_u64());
        let u2 = uniform_open(self.rng.next_u64());
        box_muller(u1, u2)
    }

    /// Standard normal draw for an arbitrary step (random access).
    pub fn normal_at(&mut self, step: u64) -> f64 {
        self.rng.set_word_pos(step as u128 * WORDS_PER_STEP);
        self.next_normal()
    }
}

/// Map a u64 to the open interval (0, 1): the top bits form an odd
/// 53-bit integer scaled by 2^{−53}, so the result is exact, never 0, and
/// never 1 — `ln(u)` is always finite.
fn uniform_open(x: u64) -> f64 {
    (((x >> 11) | 1) as f64) * (1.0 / 9007199254740992.0)
}

/// Box–Muller transform (cosine branch only; the step width is fixed at two
/// words regardless of how many draws are taken).
fn box_muller(u1: f64, u2: f64) -> f64 {
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
