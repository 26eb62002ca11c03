//! Seed derivation for reproducible experiments.
//!
//! Every random stream in a run is seeded by `derive_seed(master, tag, indices)`.
//! The tag names the purpose ("split", "forest-tree", ...) and the indices
//! locate the cell, so adding a new method or dataset never shifts the seeds
//! of existing cells.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over the tag bytes, then a splitmix64 round per index.
pub fn derive_seed(master: u64, tag: &str, indices: &[u64]) -> u64 {
    let mut tag_hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        tag_hash ^= u64::from(b);
        tag_hash = tag_hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut state = splitmix64(master ^ splitmix64(tag_hash));
    for &i in indices {
        state = splitmix64(state ^ splitmix64(i.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    state
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
