//! Seed splitting.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by
//! `(seed, domain)` and positioned on stream `index`:
//!
//! * the 256-bit key is four SplitMix64 outputs seeded with
//!   `seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15)`;
//! * the ChaCha stream id is `index` (an ion, sample or shot number).
//!
//! Each consumer owns a fixed domain constant, so streams never overlap and
//! the draws an ion (or sample) sees do not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domain for crystal jitter.
pub const DOMAIN_JITTER: u64 = 1;
/// Stream domain for x-basis shot sampling.
pub const DOMAIN_SHOTS_X: u64 = 2;
/// Stream domain for y-basis shot sampling.
pub const DOMAIN_SHOTS_Y: u64 = 3;
/// Stream domain for z-basis shot sampling.
pub const DOMAIN_SHOTS_Z: u64 = 4;
/// Stream domain for stochastic repump resets.
pub const DOMAIN_REPUMP: u64 = 5;
/// Stream domain for echo noise phase samples.
pub const DOMAIN_ECHO: u64 = 6;
/// Stream domain for per-shot crystal orientation.
pub const DOMAIN_ORIENTATION: u64 = 7;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The generator for `(seed, domain)` positioned on stream `index`.
pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
