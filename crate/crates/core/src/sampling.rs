//! Deterministic exact-count sampling shared by the upper-layer sampler and
//! the random-sample predicate.

use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Draws exactly `count` distinct values from `0..n`, uniformly without
/// replacement, deterministic for a fixed seed. Returned sorted ascending.
pub fn sample_exact(n: usize, count: usize, seed: u64) -> Vec<u32> {
    assert!(count <= n, "cannot draw {count} from {n}");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // Partial Fisher-Yates over the index space.
    let mut ids: Vec<u32> = (0..n as u32).collect();
    for i in 0..count {
        let j = rng.gen_range(i..n);
        ids.swap(i, j);
    }
    ids.truncate(count);
    ids.sort_unstable();
    ids
}
