//! Counter-based random streams.
//!
//! Every random draw is addressed by `(seed, domain, index)`: the seed and
//! domain form the ChaCha key and the index selects the stream. A sampler
//! asks for the stream of atom `i` directly, so its output does not depend
//! on evaluation order or on how work is split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Domain tags separating independent uses of one user seed.
pub mod domain {
    pub const PS_DIRECTIONS: u64 = 0x5053_0001;
    pub const MU_ATOMS: u64 = 0x4d55_0002;
    pub const SIGMA_DIRECTIONS: u64 = 0x5349_0003;
    pub const LEMMA_FUZZ: u64 = 0x4c35_0004;
    pub const BLOCK_FUZZ: u64 = 0x424c_0005;
    pub const SCENARIO: u64 = 0x5343_0006;
    pub const TEST_POINTS: u64 = 0x5450_0007;
}

/// The independent stream for item `index` of `domain` under `seed`.
pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform point on `S^{dim-1}` in `R^dim`.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Uniform draw in `[0, 1)`.
pub fn uniform01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}
