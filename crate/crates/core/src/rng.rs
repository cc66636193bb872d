//! Seed derivation.
//!
//! Every random stream in an experiment is a `ChaCha8Rng` whose seed is a
//! pure function of the master seed and a short path of integers (stream
//! tag, repeat index, ...). Results therefore do not depend on the order in
//! which repeats execute or on how many worker threads run them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Named sub-streams of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Training = 1,
    Deletion = 2,
    YHat = 3,
    YApprox = 4,
    YNull = 5,
    YAlt = 6,
    Calibration = 7,
    TestSample = 8,
    Mmd = 9,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `master` with each element of `path` in turn.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

pub fn stream_rng(master: u64, path: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, path))
}
