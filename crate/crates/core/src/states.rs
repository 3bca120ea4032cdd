//! Density matrices and pure states relative to the computational
//! (incoherent) basis, plus named state families.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{CoherenceError, Result};
use crate::numerics::{
    c, hermitian_eigenvalues, is_hermitian, max_abs_diff, outer, real, trace, ComplexMatrix, ComplexVector,
    NEGATIVE_EIG_TOL, ONE, ZERO,
};
use crate::random::{gaussian_matrix, gaussian_vector, rng};

pub const HERMITIAN_TOL: f64 = 1e-8;
pub const TRACE_TOL: f64 = 1e-9;
pub const NORM_TOL: f64 = 1e-10;

/// Trace-one, positive semidefinite Hermitian operator on `C^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-8), spectrum (≥ −1e-9) and trace (1 ± 1e-9).
    /// The stored matrix is the Hermitian part of the input.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if !mat.is_square() || mat.nrows() == 0 {
            return Err(CoherenceError::InvalidState(format!(
                "density matrix must be square and non-empty, got {:?}",
                mat.shape()
            )));
        }
        if !is_hermitian(&mat, HERMITIAN_TOL) {
            return Err(CoherenceError::InvalidState(format!(
                "not Hermitian (deviation {:.3e})",
                max_abs_diff(&mat, &mat.adjoint())
            )));
        }
        let tr = trace(&mat).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(CoherenceError::InvalidState(format!("trace {tr} differs from 1")));
        }
        let mat = crate::numerics::hermitian_part(&mat);
        let min_eig = hermitian_eigenvalues(&mat)?[0];
        if min_eig < -NEGATIVE_EIG_TOL {
            return Err(CoherenceError::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self { mat })
    }

    /// Wraps a matrix that is a density matrix by construction (channel
    /// outputs, convex mixtures). Only the Hermitian part is kept.
    pub(crate) fn from_trusted(mat: ComplexMatrix) -> Self {
        debug_assert!(mat.is_square());
        Self {
            mat: crate::numerics::hermitian_part(&mat),
        }
    }

    /// Normalizes `G G†` by its trace.
    pub fn from_gram_factor(g: &ComplexMatrix) -> Self {
        let m = g * g.adjoint();
        let t = trace(&m).re;
        Self::from_trusted(m / real(t))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_trusted(ComplexMatrix::identity(dim, dim) / real(dim as f64))
    }

    /// `|i><i|` on `C^dim`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(i, i)] = ONE;
        Self { mat: m }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self::from_trusted(self.mat.kronecker(&other.mat))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.mat.diagonal().iter().map(|z| z.re).collect()
    }

    /// Largest off-diagonal magnitude.
    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    worst = worst.max(self.mat[(i, j)].norm());
                }
            }
        }
        worst
    }
}

/// Unit vector in `C^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: ComplexVector,
}

impl PureState {
    pub fn new(amplitudes: ComplexVector) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(CoherenceError::InvalidState("empty amplitude vector".into()));
        }
        let n = amplitudes.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(CoherenceError::InvalidState(format!("norm {n} differs from 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(v: ComplexVector) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n <= 0.0 {
            return Err(CoherenceError::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            amplitudes: v / real(n),
        })
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = ComplexVector::zeros(dim);
        v[i] = ONE;
        Self { amplitudes: v }
    }

    /// `cos α |0> + sin α |1>`.
    pub fn qubit(alpha: f64) -> Self {
        Self {
            amplitudes: ComplexVector::from_vec(vec![real(alpha.cos()), real(alpha.sin())]),
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        Self {
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        }
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_trusted(outer(&self.amplitudes))
    }
}

/// `Ψ_d = (1/√d) Σ_i |i>`.
pub fn maximally_coherent(d: usize) -> Result<PureState> {
    if d == 0 {
        return Err(CoherenceError::Domain("dimension must be at least 1".into()));
    }
    let a = real(1.0 / (d as f64).sqrt());
    Ok(PureState {
        amplitudes: ComplexVector::from_element(d, a),
    })
}

/// Completely dephasing map: keeps the diagonal, zeroes everything else.
pub fn dephase(rho: &DensityMatrix) -> DensityMatrix {
    let d = rho.dim();
    let mut m = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = rho.mat[(i, i)];
    }
    DensityMatrix { mat: m }
}

/// Unitary discrete Fourier matrix `F_{jk} = ω^{jk}/√d`, `ω = e^{2πi/d}`.
pub fn fourier_matrix(d: usize) -> ComplexMatrix {
    let norm = 1.0 / (d as f64).sqrt();
    ComplexMatrix::from_fn(d, d, |j, k| {
        let phase = 2.0 * PI * ((j * k) % d) as f64 / d as f64;
        c(norm * phase.cos(), norm * phase.sin())
    })
}

/// Coherent flower state on `C^{2d}`: `(1/2d) [[1, F], [F†, 1]]` with `F` the
/// unitary Fourier matrix.
pub fn flower_state(d: usize) -> Result<DensityMatrix> {
    if d == 0 {
        return Err(CoherenceError::Domain("dimension must be at least 1".into()));
    }
    let f = fourier_matrix(d);
    let fd = f.adjoint();
    let scale = 1.0 / (2.0 * d as f64);
    let m = ComplexMatrix::from_fn(2 * d, 2 * d, |i, j| {
        let (bi, ri) = (i / d, i % d);
        let (bj, rj) = (j / d, j % d);
        let block = match (bi, bj) {
            (0, 0) | (1, 1) => {
                if ri == rj {
                    ONE
                } else {
                    ZERO
                }
            }
            (0, 1) => f[(ri, rj)],
            _ => fd[(ri, rj)],
        };
        block * real(scale)
    });
    Ok(DensityMatrix::from_trusted(m))
}

pub fn is_incoherent_state(rho: &DensityMatrix, tol: f64) -> bool {
    rho.max_off_diagonal() <= tol
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Pure,
    Mixed,
}

/// Seeded random state: Haar pure vectors, or `GG†/tr(GG†)` for a square
/// complex Gaussian `G`.
pub fn random_state(dim: usize, kind: StateKind, seed: u64) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(CoherenceError::Domain("dimension must be at least 1".into()));
    }
    let mut r = rng(seed, 0);
    Ok(match kind {
        StateKind::Pure => PureState::normalized(gaussian_vector(dim, &mut r))?.density(),
        StateKind::Mixed => DensityMatrix::from_gram_factor(&gaussian_matrix(dim, dim, &mut r)),
    })
}

/// Seeded Haar-random pure state.
pub fn random_pure_state(dim: usize, seed: u64) -> Result<PureState> {
    if dim == 0 {
        return Err(CoherenceError::Domain("dimension must be at least 1".into()));
    }
    let mut r = rng(seed, 0);
    PureState::normalized(gaussian_vector(dim, &mut r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{approx_eq, identity};
    use approx::assert_abs_diff_eq;

    #[test]
    fn maximally_coherent_examples() {
        assert_eq!(maximally_coherent(1).unwrap(), PureState::basis(1, 0));
        let psi = maximally_coherent(4).unwrap();
        assert!(psi.amplitudes().iter().all(|a| (a.re - 0.5).abs() < 1e-15 && a.im == 0.0));
        assert!(maximally_coherent(0).is_err());
    }

    #[test]
    fn dephase_examples() {
        let psi2 = maximally_coherent(2).unwrap().density();
        assert!(approx_eq(dephase(&psi2).matrix(), &(identity(2) * real(0.5)), 1e-15));
        let diag = DensityMatrix::new(crate::numerics::diag(&[0.2, 0.8])).unwrap();
        assert_eq!(dephase(&diag), diag);
        let fl = flower_state(2).unwrap();
        assert!(approx_eq(dephase(&fl).matrix(), &(identity(4) * real(0.25)), 1e-15));
    }

    #[test]
    fn flower_d1_is_psi2() {
        let fl = flower_state(1).unwrap();
        let psi2 = maximally_coherent(2).unwrap().density();
        assert!(approx_eq(fl.matrix(), psi2.matrix(), 1e-15));
    }

    #[test]
    fn flower_d2_spectrum() {
        // Brute-force characteristic check: eigenvalues {1/2, 1/2, 0, 0}.
        let fl = flower_state(2).unwrap();
        let eig = hermitian_eigenvalues(fl.matrix()).unwrap();
        for (got, want) in eig.iter().zip([0.0, 0.0, 0.5, 0.5]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn flower_states_are_valid() {
        for d in 1..=8 {
            let fl = flower_state(d).unwrap();
            assert!(DensityMatrix::new(fl.matrix().clone()).is_ok(), "d = {d}");
            for p in fl.diagonal() {
                assert_abs_diff_eq!(p, 1.0 / (2.0 * d as f64), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn incoherence_examples() {
        assert!(is_incoherent_state(&DensityMatrix::maximally_mixed(3), 1e-12));
        assert!(!is_incoherent_state(&maximally_coherent(2).unwrap().density(), 1e-12));
        let r = random_state(3, StateKind::Mixed, 5).unwrap();
        assert!(is_incoherent_state(&dephase(&r), 0.0));
    }

    #[test]
    fn random_state_contract() {
        let p = random_state(2, StateKind::Pure, 11).unwrap();
        assert_abs_diff_eq!(trace(p.matrix()).re, 1.0, epsilon = 1e-12);
        let eig = hermitian_eigenvalues(p.matrix()).unwrap();
        assert_abs_diff_eq!(eig[1], 1.0, epsilon = 1e-12);
        let m = random_state(3, StateKind::Mixed, 11).unwrap();
        assert!(DensityMatrix::new(m.matrix().clone()).is_ok());
        assert_eq!(m, random_state(3, StateKind::Mixed, 11).unwrap());
        assert_ne!(m, random_state(3, StateKind::Mixed, 12).unwrap());
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        assert!(DensityMatrix::new(crate::numerics::diag(&[0.6, 0.6])).is_err());
        assert!(DensityMatrix::new(crate::numerics::diag(&[1.5, -0.5])).is_err());
        let nonherm = ComplexMatrix::from_row_slice(2, 2, &[real(0.5), real(0.3), real(0.0), real(0.5)]);
        assert!(DensityMatrix::new(nonherm).is_err());
        assert!(PureState::new(ComplexVector::from_vec(vec![ONE, ONE])).is_err());
    }
}
