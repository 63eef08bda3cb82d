//! Deterministic seed derivation for reproducible (and parallelizable)
//! Monte Carlo runs.
//!
//! Every trial gets its own counter-based stream derived from
//! `(master seed, n, trial index)`, so results are independent of thread
//! scheduling and identical between serial and parallel execution.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; a cheap, well-mixed 64-bit hash.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix an arbitrary list of labels into a single seed.
pub fn derive_seed(master: u64, labels: &[u64]) -> u64 {
    let mut s = splitmix64(master);
    for &l in labels {
        s = splitmix64(s ^ l);
    }
    s
}

/// RNG for one Monte Carlo trial, independent of scheduling.
pub fn trial_rng(master: u64, n: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, &[n, trial]))
}

/// RNG from a bare seed (used by the one-shot sampling entry points).
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed))
}
