//! Stable seed derivation.
//!
//! Every random stream in the toolkit is keyed by a root seed plus a list of
//! labels (speaker id, dialect, tree index, ...). The mixing function is
//! fixed here rather than borrowed from `std::hash` so that derived seeds stay
//! identical across compiler and platform versions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed from `seed` and a sequence of labels.
pub fn derive(seed: u64, labels: &[&str]) -> u64 {
    let mut h = FNV_OFFSET;
    for b in seed.to_le_bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
    }
    for label in labels {
        // 0xff never occurs in UTF-8, so label boundaries are unambiguous.
        h = (h ^ 0xff).wrapping_mul(FNV_PRIME);
        for &b in label.as_bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
        }
    }
    splitmix64(h)
}

/// Convenience: a ChaCha8 generator keyed by [`derive`].
pub fn rng(seed: u64, labels: &[&str]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, labels))
}
