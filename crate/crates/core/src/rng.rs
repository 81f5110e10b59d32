//! Deterministic random streams.
//!
//! Every random draw in the crate comes from a ChaCha stream keyed by a base
//! seed and a counter tuple, so results do not depend on evaluation order or on
//! the number of worker threads.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::CVector;

/// What a stream is used for. Distinct purposes never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    SrgH1 = 1,
    SrgH2 = 2,
    SrgLoop = 3,
    AlphaH1 = 4,
    AlphaH2 = 5,
    Generic = 6,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `(seed, index, purpose)`.
pub fn split_seed(seed: u64, index: u64, purpose: Purpose) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ index) ^ (purpose as u64))
}

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from the unit sphere of `C^n` (normalized complex Gaussian).
pub fn unit_vector<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    loop {
        let v = CVector::from_fn(n, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        });
        let nv = v.norm();
        if nv > 1e-300 {
            return v.unscale(nv);
        }
    }
}
