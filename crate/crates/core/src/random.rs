//! Seeded random generation of matrices, unitaries and channels.
//!
//! Every generator takes an explicit RNG; [`rng`] derives independent,
//! reproducible streams from a `(seed, stream)` pair.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_distr::StandardNormal;

use crate::numerics::{c, complete_to_unitary, real, ComplexMatrix, ComplexVector};

pub type SimRng = ChaCha8Rng;

pub fn rng(seed: u64, stream: u64) -> SimRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> num_complex::Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    // Row-major fill keeps the sample order independent of storage layout.
    let mut m = ComplexMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

pub fn gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexVector {
    ComplexVector::from_iterator(dim, (0..dim).map(|_| complex_gaussian(rng)))
}

/// Haar-distributed `rows × cols` isometry (`rows ≥ cols`): Gram–Schmidt of a
/// Gaussian matrix with the phase convention of a positive-diagonal QR.
pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let g = gaussian_matrix(rows, cols, rng);
    let mut q: Vec<ComplexVector> = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut w = g.column(j).into_owned();
        for _ in 0..2 {
            for b in &q {
                let proj = b.dotc(&w);
                w -= b * proj;
            }
        }
        let n = w.norm();
        q.push(w / real(n));
    }
    ComplexMatrix::from_columns(&q)
}

pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let v = haar_isometry(d, d, rng);
    // Re-orthonormalize to machine precision.
    complete_to_unitary(&v, 1e-12).unwrap_or(v)
}

/// Kraus operators of a random channel `C^{dim_in} → C^{dim_out}` with
/// `count` operators, obtained by slicing a Haar isometry
/// `C^{dim_in} → C^{dim_out} ⊗ C^{count}` along the environment index.
pub fn random_kraus<R: Rng + ?Sized>(dim_in: usize, dim_out: usize, count: usize, rng: &mut R) -> Vec<ComplexMatrix> {
    assert!(dim_out * count >= dim_in, "environment too small for an isometry");
    let v = haar_isometry(dim_out * count, dim_in, rng);
    (0..count)
        .map(|alpha| ComplexMatrix::from_fn(dim_out, dim_in, |i, j| v[(i * count + alpha, j)]))
        .collect()
}
