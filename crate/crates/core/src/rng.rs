//! Seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a 64-bit
//! value derived from the top-level seed, a stage name and an index. The
//! derivation is FNV-1a over the stage name mixed through SplitMix64, so it
//! is identical on every platform and independent of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(FNV_OFFSET, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// One SplitMix64 output step.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, stage: &str, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ fnv1a(stage)) ^ splitmix64(index.wrapping_add(1)))
}

pub fn rng_for(seed: u64, stage: &str, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, stage, index))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_separates_stages_and_indices() {
        let a = derive_seed(7, "louvain", 0);
        assert_eq!(a, derive_seed(7, "louvain", 0));
        assert_ne!(a, derive_seed(7, "louvain", 1));
        assert_ne!(a, derive_seed(7, "bootstrap", 0));
        assert_ne!(a, derive_seed(8, "louvain", 0));
    }

    #[test]
    fn fnv_reference_value() {
        // FNV-1a 64 of "a"
        assert_eq!(fnv1a("a"), 0xaf63_dc4c_8601_ec8c);
    }
}
