//! Dense complex linear algebra and entropy primitives.
//!
//! Every operator in the crate is a [`ComplexMatrix`]; composite systems use
//! the Kronecker index convention `(i * rows_b + k, j * cols_b + l)`.
//! All logarithms are base 2.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{CoherenceError, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Default absolute tolerance for matrix comparisons.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Eigenvalues at or below this magnitude contribute nothing to an entropy.
pub const ENTROPY_CUTOFF: f64 = 1e-12;

/// Negative eigenvalues above this threshold are treated as PSD drift.
pub const NEGATIVE_EIG_TOL: f64 = 1e-9;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn diag(values: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| real(v)),
    ))
}

/// Rank-one projector `|v><v|`.
pub fn outer(v: &ComplexVector) -> ComplexMatrix {
    v * v.adjoint()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    a.kronecker(b)
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<'a, I>(factors: I) -> ComplexMatrix
where
    I: IntoIterator<Item = &'a ComplexMatrix>,
{
    factors
        .into_iter()
        .fold(ComplexMatrix::from_element(1, 1, ONE), |acc, f| kron(&acc, f))
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Largest entrywise magnitude of `a - b`. Shapes must agree.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Entrywise comparison with an explicit absolute tolerance.
pub fn approx_eq(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && max_abs_diff(a, b) <= tol
}

pub fn is_hermitian(m: &ComplexMatrix, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &m.adjoint()) <= tol
}

/// `(A + A†) / 2`.
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * real(0.5)
}

/// `max |V†V - 1|`, the isometry defect of `v`.
pub fn isometry_defect(v: &ComplexMatrix) -> f64 {
    max_abs_diff(&(v.adjoint() * v), &identity(v.ncols()))
}

fn require_square(m: &ComplexMatrix) -> Result<usize> {
    if m.is_square() {
        Ok(m.nrows())
    } else {
        Err(CoherenceError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        })
    }
}

/// Partial trace over the factor `traced_index` of a square operator on
/// `⊗_i C^{dims[i]}`.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], traced_index: usize) -> Result<ComplexMatrix> {
    if traced_index >= dims.len() {
        return Err(CoherenceError::DimensionMismatch(format!(
            "traced index {traced_index} out of range for {} factors",
            dims.len()
        )));
    }
    let keep: Vec<usize> = (0..dims.len()).filter(|&i| i != traced_index).collect();
    reduce_to(m, dims, &keep)
}

/// Traces out every factor not listed in `keep`. The kept factors stay in
/// their original order.
pub fn reduce_to(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let n = require_square(m)?;
    let total: usize = dims.iter().product();
    if total != n || dims.contains(&0) {
        return Err(CoherenceError::DimensionMismatch(format!(
            "operator side {n} does not match subsystem dimensions {dims:?}"
        )));
    }
    if keep.iter().any(|&k| k >= dims.len()) || keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CoherenceError::DimensionMismatch(format!(
            "kept factors {keep:?} must be strictly increasing indices below {}",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let keep_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let out_n: usize = keep_dims.iter().product();
    let env_n: usize = traced_dims.iter().product();

    // Row-major strides of the full tensor index.
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let compose = |sys: usize, env: usize| -> usize {
        let mut idx = 0;
        let mut rem = sys;
        for (pos, &k) in keep.iter().enumerate().rev() {
            idx += (rem % keep_dims[pos]) * strides[k];
            rem /= keep_dims[pos];
        }
        let mut rem = env;
        for (pos, &k) in traced.iter().enumerate().rev() {
            idx += (rem % traced_dims[pos]) * strides[k];
            rem /= traced_dims[pos];
        }
        idx
    };

    let mut out = ComplexMatrix::zeros(out_n, out_n);
    for i in 0..out_n {
        for j in 0..out_n {
            let mut acc = ZERO;
            for e in 0..env_n {
                acc += m[(compose(i, e), compose(j, e))];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Reorders the tensor factors of a square operator: factor `perm[i]` of the
/// input becomes factor `i` of the output.
pub fn permute_subsystems(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    let n = require_square(m)?;
    if dims.iter().product::<usize>() != n || perm.len() != dims.len() {
        return Err(CoherenceError::DimensionMismatch(format!(
            "operator side {n} vs dimensions {dims:?} and permutation {perm:?}"
        )));
    }
    let mut seen = vec![false; dims.len()];
    for &p in perm {
        if p >= dims.len() || std::mem::replace(&mut seen[p], true) {
            return Err(CoherenceError::DimensionMismatch(format!("{perm:?} is not a permutation")));
        }
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let map_index = |idx: usize| -> usize {
        // Digits of idx in the new layout, written back in the old layout.
        let mut digits = vec![0usize; dims.len()];
        let mut rem = idx;
        for i in (0..new_dims.len()).rev() {
            digits[perm[i]] = rem % new_dims[i];
            rem /= new_dims[i];
        }
        digits.iter().zip(dims).fold(0, |acc, (d, n)| acc * n + d)
    };
    let old: Vec<usize> = (0..n).map(map_index).collect();
    Ok(ComplexMatrix::from_fn(n, n, |i, j| m[(old[i], old[j])]))
}

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = diag(&self.eigenvalues);
        &self.eigenvectors * d * self.eigenvectors.adjoint()
    }
}

/// Eigendecomposition of the Hermitian part of `a`.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    let n = require_square(a)?;
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        eigenvectors.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues of the Hermitian part of `a`, ascending.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    require_square(a)?;
    let mut values: Vec<f64> = hermitian_part(a).symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// `-x log2 x` with the limit value at 0.
#[inline]
pub fn eta(x: f64) -> f64 {
    if x <= ENTROPY_CUTOFF {
        0.0
    } else {
        -x * x.log2()
    }
}

/// Shannon entropy in bits of a (sub)normalized distribution.
pub fn shannon_entropy<I: IntoIterator<Item = f64>>(probs: I) -> f64 {
    probs.into_iter().map(eta).sum()
}

/// Entropy of a spectrum. Values in `[-1e-9, 0)` are clipped to zero, more
/// negative ones are rejected; everything is clipped to `[0, 1]`.
pub fn spectrum_entropy(eigenvalues: &[f64]) -> Result<f64> {
    if let Some(&bad) = eigenvalues.iter().find(|&&l| l < -NEGATIVE_EIG_TOL) {
        return Err(CoherenceError::InvalidState(format!(
            "eigenvalue {bad:.3e} below the PSD drift tolerance"
        )));
    }
    Ok(shannon_entropy(eigenvalues.iter().map(|l| l.clamp(0.0, 1.0))))
}

/// Von Neumann entropy `S(m)` of a Hermitian, unit-trace operator.
pub fn matrix_entropy(m: &ComplexMatrix) -> Result<f64> {
    spectrum_entropy(&hermitian_eigenvalues(m)?)
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &crate::states::DensityMatrix) -> f64 {
    let eigs = hermitian_eigenvalues(rho.matrix()).expect("density matrices are square");
    shannon_entropy(eigs.into_iter().map(|l| l.clamp(0.0, 1.0)))
}

/// Trace norm of a Hermitian operator, `Σ |λ_i|`.
pub fn trace_norm_hermitian(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?.iter().map(|l| l.abs()).sum())
}

/// `‖a − b‖₁` for Hermitian `a`, `b` (no factor ½).
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    require_square(a)?;
    require_square(b)?;
    if a.shape() != b.shape() {
        return Err(CoherenceError::DimensionMismatch(format!(
            "{:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    trace_norm_hermitian(&(a - b))
}

/// Binary entropy `h₂(x)` for `x ∈ [0, 1]`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(CoherenceError::Domain(format!("h2 needs x in [0,1], got {x}")));
    }
    Ok(binary_entropy_unchecked(x))
}

#[inline]
pub(crate) fn binary_entropy_unchecked(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    eta(x) + eta(1.0 - x)
}

/// `g(x) = (1+x) log2(1+x) − x log2 x` for `x ≥ 0`.
pub fn g_function(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(CoherenceError::Domain(format!("g needs finite x >= 0, got {x}")));
    }
    Ok((1.0 + x) * (1.0 + x).log2() + eta(x))
}

/// `(h₂(x), g(x))` for `x ∈ [0, 1]`.
pub fn binary_entropy_and_g(x: f64) -> Result<(f64, f64)> {
    Ok((binary_entropy(x)?, g_function(x)?))
}

/// Extends the orthonormal columns of `v` (d×r) to a d×d unitary. New
/// columns come from modified Gram–Schmidt over the canonical basis vectors
/// `e_0, e_1, ...` in order, skipping any whose residual norm is below `tol`.
pub fn complete_to_unitary(v: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let d = v.nrows();
    let r = v.ncols();
    if r > d {
        return Err(CoherenceError::Completion(format!(
            "{r} columns cannot be orthonormal in dimension {d}"
        )));
    }
    let defect = isometry_defect(v);
    if defect > 1e-8 {
        return Err(CoherenceError::NotIsometry(defect));
    }
    let mut basis: Vec<ComplexVector> = v.column_iter().map(|c| c.into_owned()).collect();
    for k in 0..d {
        if basis.len() == d {
            break;
        }
        let mut w = ComplexVector::zeros(d);
        w[k] = ONE;
        // Two passes for numerical orthogonality.
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&w);
                w -= b * proj;
            }
        }
        let norm = w.norm();
        if norm > tol {
            basis.push(w / real(norm));
        }
    }
    if basis.len() != d {
        return Err(CoherenceError::Completion(format!(
            "found {} of {d} basis vectors",
            basis.len()
        )));
    }
    Ok(ComplexMatrix::from_columns(&basis))
}
