//! Seeded randomness.
//!
//! Every randomized step draws from a ChaCha8 stream seeded from a 64-bit
//! value. Per-fold seeds are derived with SplitMix64 so folds are
//! independent yet reproducible on every platform.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Recorded in run reports so results can be reproduced elsewhere.
pub const PRNG_NAME: &str =
    "ChaCha8 (rand_chacha 0.9) with Fisher-Yates shuffle; fold seed = splitmix64(seed ^ splitmix64(fold))";

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    splitmix64(seed ^ splitmix64(fold as u64))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Keep `keep` items chosen uniformly at random (seeded shuffle, then
/// prefix). Survivors come back in their original relative order.
pub fn sample_keep<T>(items: Vec<T>, keep: usize, seed: u64) -> Vec<T> {
    if keep >= items.len() {
        return items;
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut rng(seed));
    let mut chosen = order[..keep].to_vec();
    chosen.sort_unstable();
    let mut chosen = chosen.into_iter().peekable();
    items
        .into_iter()
        .enumerate()
        .filter_map(|(i, item)| {
            if chosen.peek() == Some(&i) {
                chosen.next();
                Some(item)
            } else {
                None
            }
        })
        .collect()
}
