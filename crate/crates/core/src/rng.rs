//! Seed derivation and the two noise laws used throughout.
//!
//! Every random draw is taken from a ChaCha8 stream whose seed is a hash of
//! `(master seed, stage tag, index)`. Streams never depend on evaluation
//! order, so trials can run on any number of threads and still reproduce.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Named sub-streams. The discriminant is mixed into the seed hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stage {
    Encoder = 0x01,
    Trial = 0x02,
    Feature = 0x03,
    PrivacyNoise = 0x04,
    ServerNoise = 0x05,
    AdversaryNoise = 0x06,
    Acquisition = 0x07,
    MeasurementNoise = 0x08,
    Label = 0x09,
    Channel = 0x0a,
    Probe = 0x0b,
    Task = 0x0c,
    Config = 0x0d,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Hash `(seed, stage, index)` into a fresh 64-bit seed.
pub fn derive_seed(seed: u64, stage: Stage, index: u64) -> u64 {
    let a = splitmix64(seed ^ 0x6a09_e667_f3bc_c908);
    let b = splitmix64(a ^ (stage as u64).wrapping_mul(0xd6e8_feb8_6659_fd93));
    splitmix64(b ^ index.wrapping_mul(0xa076_1d64_78bd_642f))
}

pub fn stream(seed: u64, stage: Stage, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stage, index))
}

/// One Laplace(0, b) draw by inverting the CDF.
pub fn laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let tail = 1.0 - 2.0 * u.abs();
        if tail > 0.0 {
            return -scale * u.signum() * tail.ln();
        }
    }
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, std_dev: f64) -> f64 {
    let x: f64 = rng.sample(StandardNormal);
    std_dev * x
}

/// `len` i.i.d. N(0, variance) draws.
pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, len: usize, variance: f64) -> Vec<f64> {
    let sd = variance.sqrt();
    (0..len).map(|_| gaussian(rng, sd)).collect()
}

/// Uniformly random point on the unit sphere in `dim` dimensions.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, dim, 1.0);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_separate_stages_and_indices() {
        let a = derive_seed(7, Stage::Trial, 0);
        assert_ne!(a, derive_seed(7, Stage::Trial, 1));
        assert_ne!(a, derive_seed(7, Stage::Encoder, 0));
        assert_ne!(a, derive_seed(8, Stage::Trial, 0));
        assert_eq!(a, derive_seed(7, Stage::Trial, 0));
    }

    #[test]
    fn laplace_moments() {
        let mut rng = stream(1, Stage::Encoder, 0);
        let n = 200_000;
        let b = 0.3;
        let xs: Vec<f64> = (0..n).map(|_| laplace(&mut rng, b)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let mad = xs.iter().map(|x| x.abs()).sum::<f64>() / n as f64;
        assert!(mean.abs() < 5.0 * (2.0 * b * b / n as f64).sqrt());
        assert!((var / (2.0 * b * b) - 1.0).abs() < 0.02);
        // E|X| = b
        assert!((mad / b - 1.0).abs() < 0.01);
    }

    #[test]
    fn unit_vectors_have_unit_norm() {
        let mut rng = stream(3, Stage::Probe, 0);
        for dim in [1, 2, 17] {
            let u = unit_vector(&mut rng, dim);
            let n: f64 = u.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }
}
