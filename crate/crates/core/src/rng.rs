//! Random number contract.
//!
//! Every random object is driven by a ChaCha8 generator keyed by a 64-bit
//! seed; independent sub-streams (Monte Carlo trials, spectral modes) use the
//! generator's 64-bit stream selector instead of reseeding. Standard normals
//! come from `rand_distr::StandardNormal` (ziggurat), so a (seed, stream)
//! pair reproduces the same sequence on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn normals(rng: &mut Rng, count: usize) -> Vec<f64> {
    (0..count).map(|_| StandardNormal.sample(rng)).collect()
}
