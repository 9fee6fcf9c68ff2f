//! Deterministic, order-independent random stream derivation.
//!
//! Every sampling site derives its own generator from the root seed and a
//! label path (replication, prompt index, phase, slot, ...). Streams are
//! therefore independent of the order in which sites are visited, which
//! keeps runs bit-reproducible even if iteration order changes.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent generator from `root` and a label path.
pub fn stream(root: u64, labels: &[u64]) -> ChaCha8Rng {
    let mut acc = root ^ 0x6a09_e667_f3bc_c908;
    for &label in labels {
        let mut s = label;
        let mixed = splitmix64(&mut s);
        acc = (acc ^ mixed).wrapping_mul(0xff51_afd7_ed55_8ccd);
        acc ^= acc >> 33;
    }
    let mut state = acc;
    let mut seed = [0_u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
