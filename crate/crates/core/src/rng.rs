//! Seed derivation for reproducible parallel work.
//!
//! Every random draw in the crate comes from a ChaCha8 stream cipher
//! generator (`rand_chacha::ChaCha8Rng`), which is counter based: the 256-bit
//! key fixes the sequence and the 64-bit stream id selects one of 2^64
//! independent sequences under that key.
//!
//! A work item is identified by `(seed, item, role)`:
//!
//! - the key is expanded from `seed` and `item` with SplitMix64, so items
//!   (restarts, directions, trials, encoder draws) get unrelated keys;
//! - `role` becomes the stream id, so the consumers inside one item (codebook
//!   for user a, codebook for user b, channel noise, ...) never share draws.
//!
//! Because generators are derived from indices rather than handed out in
//! execution order, the output is identical for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids for the consumers inside one work item.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Role {
    Init = 1,
    CodebookA = 2,
    CodebookB = 3,
    Messages = 4,
    Channel = 5,
    Encoder = 6,
    Instance = 7,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// One step of the SplitMix64 output function.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for work item `item` of a run seeded with `seed`, consumer `role`.
pub fn item_rng(seed: u64, item: u64, role: Role) -> ChaCha8Rng {
    let mut item_state = item;
    let mut state = seed ^ splitmix64(&mut item_state);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(role as u64);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn draws(seed: u64, item: u64, role: Role) -> Vec<u64> {
        let mut rng = item_rng(seed, item, role);
        (0..8).map(|_| rng.random()).collect()
    }

    #[test]
    fn same_triple_same_stream() {
        assert_eq!(draws(7, 3, Role::Channel), draws(7, 3, Role::Channel));
    }

    #[test]
    fn items_and_roles_are_separated() {
        let base = draws(7, 3, Role::Channel);
        assert_ne!(base, draws(7, 4, Role::Channel));
        assert_ne!(base, draws(8, 3, Role::Channel));
        assert_ne!(base, draws(7, 3, Role::CodebookA));
    }
}
