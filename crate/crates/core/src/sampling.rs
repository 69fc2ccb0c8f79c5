//! Seeded random draws: points, vectors, unitary matrices and low-discrepancy samples.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex vector with independent standard Gaussian real and imaginary parts.
pub fn gaussian_vector(rng: &mut SeededRng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

/// Uniformly distributed unit vector in ℂⁿ.
pub fn unit_vector(rng: &mut SeededRng, n: usize) -> Vec<Complex64> {
    let v = gaussian_vector(rng, n);
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// Point with uniformly random direction and modulus uniform in `[rmin, rmax]`.
pub fn annulus_point(rng: &mut SeededRng, n: usize, rmin: f64, rmax: f64) -> Vec<Complex64> {
    let r = rng.random_range(rmin..=rmax);
    unit_vector(rng, n).into_iter().map(|x| x * r).collect()
}

/// Point of the real cube `[0,1)^{2n}` as complex coordinates.
pub fn torus_point(rng: &mut SeededRng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.random::<f64>(), rng.random::<f64>())).collect()
}

/// Haar-distributed unitary matrix from the QR factorization of a Gaussian matrix.
pub fn unitary(rng: &mut SeededRng, n: usize) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Random Hermitian matrix with Gaussian entries of size `scale`.
pub fn hermitian(rng: &mut SeededRng, n: usize, scale: f64) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    (&g + g.adjoint()) * Complex64::new(0.5 * scale, 0.0)
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// The `index`-th point of the Halton sequence in `dims ≤ 16` dimensions.
pub fn halton(index: u64, dims: usize) -> Vec<f64> {
    assert!(dims <= PRIMES.len(), "Halton sequence limited to {} dimensions", PRIMES.len());
    PRIMES[..dims].iter().map(|&p| radical_inverse(index + 1, p)).collect()
}
