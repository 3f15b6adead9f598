#![allow(dead_code)]

pub mod oracles;
pub mod props;

use mac_codebook::channel::{complex_gaussian, seeded_rng};
use mac_codebook::numerics::{CMatrix, HermitianPsd};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    seeded_rng(seed, 0xfeed)
}

pub fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Random PSD matrix of the given rank (`A A*` with `A` n x rank).
pub fn random_psd<R: Rng>(n: usize, rank: usize, scale: f64, rng: &mut R) -> HermitianPsd {
    let a = gaussian_matrix(n, rank, rng);
    HermitianPsd::new((&a * a.adjoint()).scale(scale)).unwrap()
}
