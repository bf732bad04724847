//! Counter-based seeding for reproducible parallel Monte Carlo.
//!
//! Every trial gets its own RNG keyed by `(base_seed, stream, index)`, so
//! results depend only on those numbers and never on thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step; good avalanche, used only for key derivation.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for one trial of one logical stream. Trials with distinct
/// `(base_seed, stream, index)` triples are statistically independent.
pub fn trial_rng(base_seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut state = base_seed ^ stream.rotate_left(24) ^ index.rotate_left(48);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
