//! Seeded pseudo-random numbers: xorshift64* with Box–Muller normals.
//!
//! The generator is fully specified here so that streams reproduce across
//! platforms and can be re-implemented in other languages:
//!
//! - seeding: one splitmix64 round over the user seed
//!   (gamma `0x9E3779B97F4A7C15`, mixers `0xBF58476D1CE4E5B9`,
//!   `0x94D049BB133111EB`), so seed 0 is usable;
//! - stream: xorshift64* with shifts `12, 25, 27` and output multiplier
//!   `0x2545F4914F6CDD1D`;
//! - uniforms: the top 53 bits of each output word, mapped onto `[0, 1)`;
//! - normals: Box–Muller, cosine branch only, two uniforms per sample.

use crate::error::{Error, Result};
use crate::scalar::{real, Scalar};
use crate::tensor::{Matrix, Vector};

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const XORSHIFT_STAR_MULT: u64 = 0x2545_F491_4F6C_DD1D;

#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut z = seed.wrapping_add(SPLITMIX_GAMMA);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        // xorshift state must never be zero
        let state = if z == 0 { SPLITMIX_GAMMA } else { z };
        Rng { seed, state }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(XORSHIFT_STAR_MULT)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform<T: Scalar>(&mut self, lo: T, hi: T) -> T {
        lo + (hi - lo) * real::<T>(self.next_f64())
    }

    /// Standard normal sample via Box–Muller (cosine branch).
    pub fn gaussian<T: Scalar>(&mut self) -> T {
        let u1 = self.next_f64().max(f64::MIN_POSITIVE);
        let u2 = self.next_f64();
        real((-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos())
    }

    /// Sample from a 2-D Gaussian: `mean + L·[g1, g2]` with `L` the Cholesky
    /// factor of `cov`. `cov` must be 2×2 symmetric positive definite; the
    /// lower triangle is the one consulted.
    pub fn gaussian2d<T: Scalar>(&mut self, mean: &Vector<T>, cov: &Matrix<T>) -> Result<Vector<T>> {
        if cov.rows() != 2 || cov.cols() != 2 || mean.len() != 2 {
            return Err(Error::shape(format!(
                "gaussian2d: covariance {}x{}, mean length {}; need 2x2 and 2",
                cov.rows(),
                cov.cols(),
                mean.len()
            )));
        }
        let (c00, c10, c11) = (cov[(0, 0)], cov[(1, 0)], cov[(1, 1)]);
        if c00 <= T::zero() {
            return Err(Error::invalid(format!(
                "gaussian2d: covariance not positive definite (pivot {c00})"
            )));
        }
        let l11 = c00.sqrt();
        let l21 = c10 / l11;
        let pivot = c11 - l21 * l21;
        if pivot <= T::zero() {
            return Err(Error::invalid(format!(
                "gaussian2d: covariance not positive definite (pivot {pivot})"
            )));
        }
        let l22 = pivot.sqrt();
        let g1: T = self.gaussian();
        let g2: T = self.gaussian();
        Ok(Vector::from_vec(vec![
            mean[0] + l11 * g1,
            mean[1] + l21 * g1 + l22 * g2,
        ]))
    }

    /// Uniform index in `0..n`. The modulo bias is below `n / 2^64`,
    /// irrelevant at the sizes used here.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<X>(&mut self, xs: &mut [X]) {
        for i in (1..xs.len()).rev() {
            let j = self.index(i + 1);
            xs.swap(i, j);
        }
    }
}
