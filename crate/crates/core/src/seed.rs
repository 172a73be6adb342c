//! Seed derivation. All randomness in the crate flows from 64-bit seeds mixed
//! through SplitMix64 so that independent streams never need bookkeeping.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 output step.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a parent seed with a stream label.
pub fn mix(seed: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ stream.wrapping_mul(GOLDEN))
}

/// Seed of `mpirun` instance `run` inside reproducibility trial `trial`.
pub fn derive_run_seed(master: u64, run: u64, trial: u64) -> u64 {
    mix(mix(master, trial.wrapping_add(1)), run.wrapping_add(1) << 1)
}

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, stream))
}

pub(crate) mod streams {
    pub const CLOCKS: u64 = 1;
    pub const ENGINE: u64 = 2;
    pub const NETWORK: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const LAUNCH: u64 = 5;
}
