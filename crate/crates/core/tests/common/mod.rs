#![allow(dead_code)]

use coherence::channels::KrausChannel;
use coherence::numerics::{c, diag, ComplexMatrix};
use coherence::random::{complex_gaussian, rng};
use coherence::states::DensityMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

/// Random channel whose Kraus operators have one nonzero entry per column.
/// Uses injective column maps when `din ≤ dout`, single-entry operators
/// otherwise.
pub fn random_io_channel(din: usize, dout: usize, count: usize, seed: u64) -> KrausChannel {
    let mut r = rng(seed, 101);
    // weights[α][j], normalized over α for each column j.
    let mut weights: Vec<Vec<num_complex::Complex64>> =
        (0..count).map(|_| (0..din).map(|_| complex_gaussian(&mut r)).collect()).collect();
    for j in 0..din {
        let norm: f64 = weights.iter().map(|w| w[j].norm_sqr()).sum::<f64>().sqrt();
        for w in weights.iter_mut() {
            w[j] /= norm;
        }
    }
    let mut kraus = Vec::new();
    if din <= dout {
        for w in &weights {
            let mut rows: Vec<usize> = (0..dout).collect();
            rows.shuffle(&mut r);
            let mut k = ComplexMatrix::zeros(dout, din);
            for j in 0..din {
                k[(rows[j], j)] = w[j];
            }
            kraus.push(k);
        }
    } else {
        for w in &weights {
            for j in 0..din {
                let mut k = ComplexMatrix::zeros(dout, din);
                k[(r.random_range(0..dout), j)] = w[j];
                kraus.push(k);
            }
        }
    }
    KrausChannel::new(kraus).expect("complete by construction")
}

pub fn random_incoherent_state(d: usize, seed: u64, stream: u64) -> DensityMatrix {
    let mut r = rng(seed, stream);
    let w: Vec<f64> = (0..d).map(|_| r.random_range(0.0..1.0)).collect();
    let s: f64 = w.iter().sum();
    DensityMatrix::new(diag(&w.iter().map(|x| x / s).collect::<Vec<_>>())).unwrap()
}

/// `b = U(δ)·a`: the same channel followed by a small rotation.
pub fn nearby_qubit_pair(seed: u64, delta: f64) -> (KrausChannel, KrausChannel) {
    let count = 1 + (seed % 3) as usize;
    let a = KrausChannel::random(2, 2, count, seed).unwrap();
    let (s, co) = delta.sin_cos();
    let rot = ComplexMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)]);
    let b = KrausChannel::new(a.kraus().iter().map(|k| &rot * k).collect()).unwrap();
    (a, b)
}
