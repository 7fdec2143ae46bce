use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Seed from which every random stream in a run is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> SeededRng {
        SeededRng(ChaCha8Rng::seed_from_u64(self.0))
    }

    /// Independent sub-seed for a named purpose, so streams for
    /// initialization, shuffling and dropout do not interleave.
    pub fn derive(self, salt: u64) -> RngSeed {
        // splitmix64 finalizer
        let mut z = self.0 ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RngSeed(z ^ (z >> 31))
    }
}

/// Deterministic random stream.
#[derive(Debug, Clone)]
pub struct SeededRng(ChaCha8Rng);

impl SeededRng {
    /// Sample from the open interval `(-bound, bound)`.
    pub fn uniform_open(&mut self, bound: f64) -> f64 {
        loop {
            let v = self.0.gen_range(-bound..bound);
            if v != -bound {
                return v;
            }
        }
    }

    pub fn unit(&mut self) -> f64 {
        self.0.gen::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.0);
    }
}
