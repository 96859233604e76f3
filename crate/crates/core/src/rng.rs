//! Seeded randomness. Every stream is a ChaCha8 generator seeded from a
//! 64-bit value; child seeds are derived from a root seed and an index with
//! the SplitMix64 finalizer, so parallel work reproduces sequential work.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for the `index`-th child stream of `root`.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn child_rng(root: u64, index: u64) -> Rng {
    rng_from_seed(derive_seed(root, index))
}

/// Inverse-CDF draw: first position whose cumulative weight exceeds `u * total`.
/// Zero-weight entries are never returned.
pub fn sample_categorical(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}
