//! Seeded random streams. Every trial owns its own generators, derived from
//! a 64-bit key so that runs never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of components into one seed. Order matters.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Zero-mean normal draws; a zero deviation yields exact zeros without
/// consuming the stream.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    rng: ChaCha8Rng,
    normal: Option<Normal<f64>>,
}

impl NoiseSource {
    pub fn new(seed: u64, std_dev: f64) -> Self {
        let normal = (std_dev > 0.0).then(|| Normal::new(0.0, std_dev).expect("finite std"));
        Self {
            rng: stream(seed),
            normal,
        }
    }

    pub fn sample(&mut self) -> f64 {
        match &self.normal {
            Some(n) => n.sample(&mut self.rng),
            None => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_separates_components() {
        let a = derive_seed(1, &[0, 1, 2]);
        let b = derive_seed(1, &[0, 2, 1]);
        let c = derive_seed(2, &[0, 1, 2]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(1, &[0, 1, 2]));
    }

    #[test]
    fn noise_is_repeatable() {
        let mut a = NoiseSource::new(7, 0.1);
        let mut b = NoiseSource::new(7, 0.1);
        for _ in 0..100 {
            assert_eq!(a.sample(), b.sample());
        }
        let mut z = NoiseSource::new(7, 0.0);
        assert_eq!(z.sample(), 0.0);
    }
}
