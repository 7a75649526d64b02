//! Small deterministic sampling helpers.
//!
//! Everything in this crate that needs randomness goes through a seeded
//! [`rand_chacha::ChaCha8Rng`], so identical seeds reproduce identical runs
//! across platforms.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Standard normal sample via Box-Muller. One uniform pair per draw; the
/// sine partner is discarded to keep the draw order trivially predictable.
pub(crate) fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Derive a per-(scale, node) stream from a base seed so sibling nodes draw
/// independent but reproducible randomness regardless of processing order.
pub(crate) fn node_rng(seed: u64, scale: usize, id: usize) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mixed = seed
        ^ (scale as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ (id as u64).wrapping_mul(0xd1b5_4a32_d192_ed03);
    ChaCha8Rng::seed_from_u64(mixed)
}
