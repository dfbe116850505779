//! Seeded random streams.
//!
//! Every stochastic component draws from a ChaCha8 stream identified by
//! `(seed, domain, index)`, so per-video work can run on any thread without
//! changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub(crate) const DOMAIN_CORPUS: u64 = 0x636f_7270;
pub(crate) const DOMAIN_SAMPLE: u64 = 0x7361_6d70;
pub(crate) const DOMAIN_ORACLE: u64 = 0x6f72_636c;
pub(crate) const DOMAIN_EVAL: u64 = 0x6576_616c;
pub(crate) const DOMAIN_FRAMES: u64 = 0x6672_6d73;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream for `index` within `domain` under `seed`.
pub fn substream(seed: u64, domain: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(domain)));
    rng.set_stream(index);
    rng
}

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
