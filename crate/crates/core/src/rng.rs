//! Seeded random streams.
//!
//! Every stochastic step in the crate draws from a [`Prng`] obtained from a
//! master seed and a stream name, so simulation, initialization, shuffling,
//! dropout and Gibbs sampling never share state. The generator is ChaCha8
//! (`rand_chacha` 0.9); normals come from `rand_distr::StandardNormal`.
//! Changing either changes every recorded result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Prng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed of the stream `name` under `master`.
pub fn derive_seed(master: u64, name: &str) -> u64 {
    splitmix64(master ^ splitmix64(fnv1a(name)))
}

/// Seed of the `index`-th child of `seed`.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(splitmix64(index.wrapping_add(1))))
}

pub fn stream(master: u64, name: &str) -> Prng {
    Prng::seed_from_u64(derive_seed(master, name))
}

pub fn from_seed(seed: u64) -> Prng {
    Prng::seed_from_u64(seed)
}
