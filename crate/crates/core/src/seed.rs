//! Stable seed derivation.
//!
//! Every derived stream in the crate (per-signal noise, per-restart k-means,
//! per-trial benchmark datasets) is seeded by folding integer tags into a
//! master seed with the SplitMix64 finalizer:
//!
//! ```text
//! h = mix(master ^ 0x9E37_79B9_7F4A_7C15)
//! for tag in tags: h = mix(h ^ tag.wrapping_mul(0xBF58_476D_1CE4_E5B9))
//! ```
//!
//! where `mix` is the SplitMix64 output function. The derivation is part of
//! the reproducibility contract and must not change.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const TAG_MUL: u64 = 0xBF58_476D_1CE4_E5B9;

/// SplitMix64 output function.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and an ordered list of tags.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(mix(master ^ GOLDEN), |h, &t| mix(h ^ t.wrapping_mul(TAG_MUL)))
}

pub(crate) fn rng_from(master: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tags))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_stable_and_tag_sensitive() {
        assert_eq!(derive_seed(7, &[1, 2]), derive_seed(7, &[1, 2]));
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
        assert_ne!(derive_seed(7, &[1]), derive_seed(8, &[1]));
        assert_ne!(derive_seed(7, &[]), derive_seed(7, &[0]));
    }

    #[test]
    fn mix_known_value() {
        // First output of the reference SplitMix64 generator seeded with 0.
        assert_eq!(mix(0), 0xE220_A839_7B1D_CDAF);
    }
}
