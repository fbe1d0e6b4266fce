//! Deterministic seed derivation.
//!
//! All randomness in the crate flows from one root seed. Each consumer derives
//! its own stream seed as `derive_seed(root, tag, index)`, where `tag` names
//! the stage ("click", "split", "dict-init", ...) and `index` separates
//! repeated uses (click index, round index, pass index). The derivation is
//! FNV-1a over the inputs followed by a SplitMix64 finalizer, so streams do
//! not collide or correlate in practice.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Derive a stream seed from `(root, tag, index)`.
pub fn derive_seed(root: u64, tag: &str, index: u64) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in root
        .to_le_bytes()
        .iter()
        .chain(tag.as_bytes())
        .chain(index.to_le_bytes().iter())
    {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

/// Seeded RNG for a derived stream.
pub fn stream_rng(root: u64, tag: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, tag, index))
}
