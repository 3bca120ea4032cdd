//! Coherence measures on states.
//!
//! The coherence of formation is computed as a convex roof over pure-state
//! ensembles. Every ensemble of `ρ = Σ_j λ_j |e_j><e_j|` with `m` members has
//! the form `ψ̃_k = Σ_j U_kj √λ_j |e_j>` for an `m × r` isometry `U`, so the
//! search runs over the Stiefel manifold of such isometries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoherenceError, Result};
use crate::numerics::{binary_entropy_unchecked, hermitian_eig, real, shannon_entropy, ComplexMatrix, ZERO};
use crate::random::{haar_isometry, rng};
use crate::states::{dephase, is_incoherent_state, DensityMatrix, PureState};

/// Entropy of coherence `S(Δ(φ))` of a pure state, in bits.
pub fn entropy_of_coherence(phi: &PureState) -> f64 {
    shannon_entropy(phi.probabilities())
}

/// `C_r(ρ) = S(Δ(ρ)) − S(ρ)`, with tiny negative round-off clamped to 0.
/// Exactly diagonal inputs give exactly 0.
pub fn relative_entropy_of_coherence(rho: &DensityMatrix) -> f64 {
    if rho.max_off_diagonal() == 0.0 {
        return 0.0;
    }
    let s_dephased = shannon_entropy(dephase(rho).diagonal().into_iter().map(|p| p.clamp(0.0, 1.0)));
    let s = crate::numerics::von_neumann_entropy(rho);
    (s_dephased - s).max(0.0)
}

/// Number of amplitudes with magnitude above `tol`.
pub fn coherence_rank(phi: &PureState, tol: f64) -> usize {
    phi.amplitudes().iter().filter(|a| a.norm() > tol).count()
}

/// Closed form for qubits: `h₂((1 + √(1 − 4|ρ₀₁|²)) / 2)`.
pub fn qubit_coherence_of_formation(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 2 {
        return Err(CoherenceError::DimensionMismatch(format!(
            "closed form needs a qubit, got dimension {}",
            rho.dim()
        )));
    }
    let off = rho.matrix()[(0, 1)].norm();
    let root = (1.0 - 4.0 * off * off).max(0.0).sqrt();
    Ok(binary_entropy_unchecked((1.0 + root) / 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoofConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub stall_iters: usize,
    pub stall_tol: f64,
    pub seed: u64,
    /// Ensemble size; `None` means `rank²`.
    pub ensemble_size: Option<usize>,
    pub max_dim: usize,
    /// Use the closed form for qubits instead of the optimizer.
    pub qubit_fast_path: bool,
}

impl Default for RoofConfig {
    fn default() -> Self {
        Self {
            restarts: 64,
            max_iters: 2000,
            stall_iters: 50,
            stall_tol: 1e-10,
            seed: 42,
            ensemble_size: None,
            max_dim: 16,
            qubit_fast_path: true,
        }
    }
}

impl RoofConfig {
    /// Smaller budget for use inside outer optimizations.
    pub fn inner() -> Self {
        Self {
            restarts: 4,
            max_iters: 400,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvexRoofResult {
    /// Bits. An upper bound on `C_f` for optimizer results.
    pub value: f64,
    pub ensemble: Vec<(f64, PureState)>,
    /// Riemannian gradient norm at the returned ensemble (0 for exact paths).
    pub residual: f64,
}

/// Coherence of formation via convex-roof minimization.
///
/// Incoherent and pure inputs are exact. Qubits use the closed form when
/// `cfg.qubit_fast_path` is set; everything else runs a multi-start
/// descent over ensemble isometries and returns the best ensemble found.
pub fn coherence_of_formation(rho: &DensityMatrix, cfg: &RoofConfig) -> Result<ConvexRoofResult> {
    if rho.dim() > cfg.max_dim {
        return Err(CoherenceError::DimensionTooLarge {
            dim: rho.dim(),
            max: cfg.max_dim,
        });
    }
    if is_incoherent_state(rho, 1e-14) {
        let ensemble = rho
            .diagonal()
            .into_iter()
            .enumerate()
            .filter(|(_, p)| *p > 0.0)
            .map(|(i, p)| (p, PureState::basis(rho.dim(), i)))
            .collect();
        return Ok(ConvexRoofResult {
            value: 0.0,
            ensemble,
            residual: 0.0,
        });
    }
    let problem = RoofProblem::new(rho)?;
    if problem.rank == 1 {
        let phi = problem.member(0, &ComplexMatrix::identity(1, 1)).1;
        return Ok(ConvexRoofResult {
            value: entropy_of_coherence(&phi),
            ensemble: vec![(1.0, phi)],
            residual: 0.0,
        });
    }
    if cfg.qubit_fast_path && rho.dim() == 2 {
        // The ensemble still comes from the optimizer so callers can inspect it.
        let value = qubit_coherence_of_formation(rho)?;
        let fast_cfg = RoofConfig {
            restarts: 2,
            qubit_fast_path: false,
            ..cfg.clone()
        };
        let mut opt = convex_roof_search(rho, &fast_cfg)?;
        opt.value = value;
        return Ok(opt);
    }
    convex_roof_search(rho, cfg)
}

/// Value of [`coherence_of_formation`] without building an ensemble where an
/// exact shortcut exists.
pub fn coherence_of_formation_value(rho: &DensityMatrix, cfg: &RoofConfig) -> Result<f64> {
    if rho.dim() > cfg.max_dim {
        return Err(CoherenceError::DimensionTooLarge {
            dim: rho.dim(),
            max: cfg.max_dim,
        });
    }
    if is_incoherent_state(rho, 1e-14) {
        return Ok(0.0);
    }
    if cfg.qubit_fast_path && rho.dim() == 2 {
        return qubit_coherence_of_formation(rho);
    }
    Ok(coherence_of_formation(rho, cfg)?.value)
}

/// Runs the ensemble optimizer unconditionally (no exact shortcuts).
pub fn convex_roof_search(rho: &DensityMatrix, cfg: &RoofConfig) -> Result<ConvexRoofResult> {
    let problem = RoofProblem::new(rho)?;
    let m = cfg.ensemble_size.unwrap_or(problem.rank * problem.rank).max(problem.rank);

    // Start 0 is the eigen-ensemble itself; the rest are Haar isometries.
    let runs: Vec<(f64, f64, ComplexMatrix)> = (0..cfg.restarts.max(1) + 1)
        .into_par_iter()
        .map(|i| {
            let u0 = if i == 0 {
                ComplexMatrix::identity(m, problem.rank)
            } else {
                haar_isometry(m, problem.rank, &mut rng(cfg.seed, i as u64))
            };
            let (u, value, residual) = problem.descend(u0, cfg);
            (value, residual, u)
        })
        .collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.0 < runs[best].0 {
            best = i;
        }
    }
    let (value, residual, u) = &runs[best];
    let ensemble = (0..m)
        .map(|k| problem.member(k, u))
        .filter(|(p, _)| *p > 1e-14)
        .collect();
    Ok(ConvexRoofResult {
        value: *value,
        ensemble,
        residual: *residual,
    })
}

struct RoofProblem {
    dim: usize,
    rank: usize,
    /// `dim × rank`, columns `√λ_j e_j`.
    weighted: ComplexMatrix,
}

impl RoofProblem {
    fn new(rho: &DensityMatrix) -> Result<Self> {
        let eig = hermitian_eig(rho.matrix())?;
        let kept: Vec<usize> = (0..rho.dim()).rev().filter(|&i| eig.eigenvalues[i] > 1e-12).collect();
        let weighted = ComplexMatrix::from_fn(rho.dim(), kept.len(), |row, col| {
            let i = kept[col];
            eig.eigenvectors[(row, i)] * real(eig.eigenvalues[i].sqrt())
        });
        Ok(Self {
            dim: rho.dim(),
            rank: kept.len(),
            weighted,
        })
    }

    /// `m × dim` matrix of unnormalized ensemble amplitudes.
    fn amplitudes(&self, u: &ComplexMatrix) -> ComplexMatrix {
        u * self.weighted.transpose()
    }

    fn value(&self, amps: &ComplexMatrix) -> f64 {
        let mut total = 0.0;
        for k in 0..amps.nrows() {
            let mut p = 0.0;
            let mut h = 0.0;
            for i in 0..self.dim {
                let q = amps[(k, i)].norm_sqr();
                p += q;
                if q > 0.0 {
                    h -= q * q.log2();
                }
            }
            if p > 0.0 {
                h += p * p.log2();
            }
            total += h;
        }
        total
    }

    /// Euclidean gradient with respect to `conj(U)`.
    fn gradient(&self, amps: &ComplexMatrix) -> ComplexMatrix {
        let mut d = ComplexMatrix::zeros(amps.nrows(), self.dim);
        for k in 0..amps.nrows() {
            let p: f64 = (0..self.dim).map(|i| amps[(k, i)].norm_sqr()).sum();
            if p <= 0.0 {
                continue;
            }
            let lp = p.log2();
            for i in 0..self.dim {
                let q = amps[(k, i)].norm_sqr();
                d[(k, i)] = if q > 1e-300 { amps[(k, i)] * real(lp - q.log2()) } else { ZERO };
            }
        }
        d * self.weighted.map(|z| z.conj())
    }

    fn member(&self, k: usize, u: &ComplexMatrix) -> (f64, PureState) {
        let amps = self.amplitudes(u);
        let row = amps.row(k).transpose();
        let p = row.norm_squared();
        let phi = PureState::normalized(row).unwrap_or_else(|_| PureState::basis(self.dim, 0));
        (p, phi)
    }

    /// Armijo-backtracked Riemannian gradient descent on the Stiefel manifold
    /// with a Gram–Schmidt retraction.
    fn descend(&self, mut u: ComplexMatrix, cfg: &RoofConfig) -> (ComplexMatrix, f64, f64) {
        let mut amps = self.amplitudes(&u);
        let mut value = self.value(&amps);
        let mut step = 1.0;
        let mut residual = f64::INFINITY;
        let mut anchor = value;
        let mut since_anchor = 0;
        for _ in 0..cfg.max_iters {
            let g = self.gradient(&amps);
            let ug = u.adjoint() * &g;
            let sym = (&ug + ug.adjoint()) * real(0.5);
            let xi = &g - &u * sym;
            let xi_norm2 = xi.norm_squared();
            residual = xi_norm2.sqrt();
            if residual < 1e-12 {
                break;
            }
            let mut accepted = false;
            while step > 1e-14 {
                let trial = orthonormalize(&(&u - &xi * real(step)));
                let trial_amps = self.amplitudes(&trial);
                let trial_value = self.value(&trial_amps);
                if trial_value <= value - 1e-4 * step * xi_norm2 {
                    u = trial;
                    amps = trial_amps;
                    value = trial_value;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            step = (step * 2.0).min(64.0);
            if anchor - value >= cfg.stall_tol {
                anchor = value;
                since_anchor = 0;
            } else {
                since_anchor += 1;
                if since_anchor >= cfg.stall_iters {
                    break;
                }
            }
        }
        (u, value.max(0.0), residual)
    }
}

/// Modified Gram–Schmidt on the columns (two passes).
fn orthonormalize(y: &ComplexMatrix) -> ComplexMatrix {
    let mut q = y.clone();
    for j in 0..q.ncols() {
        for _ in 0..2 {
            for prev in 0..j {
                let proj = q.column(prev).dotc(&q.column(j));
                let col = q.column(prev).into_owned() * proj;
                let mut target = q.column_mut(j);
                target -= col;
            }
        }
        let n = q.column(j).norm();
        q.column_mut(j).scale_mut(1.0 / n);
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, ONE};
    use crate::states::{flower_state, maximally_coherent, random_pure_state, random_state, StateKind};
    use approx::assert_abs_diff_eq;

    #[test]
    fn entropy_of_coherence_examples() {
        assert_eq!(entropy_of_coherence(&PureState::basis(3, 0)), 0.0);
        for d in [2usize, 3, 5, 8] {
            assert_abs_diff_eq!(
                entropy_of_coherence(&maximally_coherent(d).unwrap()),
                (d as f64).log2(),
                epsilon = 1e-12
            );
        }
        let a: f64 = 0.4;
        assert_abs_diff_eq!(
            entropy_of_coherence(&PureState::qubit(a)),
            binary_entropy_unchecked(a.cos().powi(2)),
            epsilon = 1e-14
        );
    }

    #[test]
    fn relative_entropy_examples() {
        assert_eq!(relative_entropy_of_coherence(&DensityMatrix::maximally_mixed(3)), 0.0);
        assert_abs_diff_eq!(
            relative_entropy_of_coherence(&flower_state(2).unwrap()),
            1.0,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            relative_entropy_of_coherence(&maximally_coherent(2).unwrap().density()),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            relative_entropy_of_coherence(&maximally_coherent(4).unwrap().density()),
            2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn coherence_rank_examples() {
        assert_eq!(coherence_rank(&PureState::basis(2, 0), 1e-12), 1);
        assert_eq!(coherence_rank(&maximally_coherent(5).unwrap(), 1e-12), 5);
        assert_eq!(coherence_rank(&PureState::qubit(0.3), 1e-12), 2);
    }

    #[test]
    fn formation_of_pure_and_incoherent_states() {
        let cfg = RoofConfig::default();
        let phi = random_pure_state(4, 3).unwrap();
        let r = coherence_of_formation(&phi.density(), &cfg).unwrap();
        assert_abs_diff_eq!(r.value, entropy_of_coherence(&phi), epsilon = 1e-9);
        let r = coherence_of_formation(&DensityMatrix::maximally_mixed(4), &cfg).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.ensemble.len(), 4);
    }

    #[test]
    fn qubit_closed_form_agrees_with_search() {
        // ρ₀₁ = 1/4 with a skewed diagonal.
        let m = ComplexMatrix::from_row_slice(2, 2, &[real(0.6), real(0.25), real(0.25), real(0.4)]);
        let rho = DensityMatrix::new(m).unwrap();
        let closed = qubit_coherence_of_formation(&rho).unwrap();
        let cfg = RoofConfig {
            restarts: 100,
            ensemble_size: Some(4),
            ..RoofConfig::default()
        };
        let searched = convex_roof_search(&rho, &cfg).unwrap();
        assert_abs_diff_eq!(searched.value, closed, epsilon = 1e-4);
        // h₂((1+√(3/4))/2), evaluated independently.
        assert_abs_diff_eq!(closed, 0.354_578_902_665_270, epsilon = 1e-9);
        for seed in 0..5 {
            let rho = random_state(2, StateKind::Mixed, seed).unwrap();
            let closed = qubit_coherence_of_formation(&rho).unwrap();
            let searched = convex_roof_search(&rho, &RoofConfig::default()).unwrap();
            assert_abs_diff_eq!(searched.value, closed, epsilon = 1e-4);
        }
    }

    #[test]
    fn ensemble_reconstructs_state() {
        let rho = random_state(3, StateKind::Mixed, 9).unwrap();
        let cfg = RoofConfig {
            restarts: 8,
            ..RoofConfig::default()
        };
        let r = coherence_of_formation(&rho, &cfg).unwrap();
        let total: f64 = r.ensemble.iter().map(|(p, _)| p).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
        let mut mix = ComplexMatrix::zeros(3, 3);
        for (p, phi) in &r.ensemble {
            mix += phi.density().matrix() * real(*p);
        }
        let dist = crate::numerics::trace_distance(&mix, rho.matrix()).unwrap();
        assert!(dist < 1e-6, "trace distance {dist}");
        let recomputed: f64 = r.ensemble.iter().map(|(p, phi)| p * entropy_of_coherence(phi)).sum();
        assert_abs_diff_eq!(recomputed, r.value, epsilon = 1e-9);
    }

    #[test]
    fn flower_two_has_formation_one_and_a_half() {
        let r = coherence_of_formation(&flower_state(2).unwrap(), &RoofConfig::default()).unwrap();
        assert_abs_diff_eq!(r.value, 1.5, epsilon = 1e-3);
    }

    #[test]
    fn formation_invariant_under_diagonal_unitaries() {
        let rho = random_state(3, StateKind::Mixed, 21).unwrap();
        let phases = crate::numerics::ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            ONE,
            c(0.3f64.cos(), 0.3f64.sin()),
            c(2.1f64.cos(), 2.1f64.sin()),
        ]));
        let rotated = DensityMatrix::new(&phases * rho.matrix() * phases.adjoint()).unwrap();
        assert_abs_diff_eq!(
            relative_entropy_of_coherence(&rho),
            relative_entropy_of_coherence(&rotated),
            epsilon = 1e-9
        );
        let cfg = RoofConfig {
            restarts: 16,
            ..RoofConfig::default()
        };
        let a = coherence_of_formation(&rho, &cfg).unwrap().value;
        let b = coherence_of_formation(&rotated, &cfg).unwrap().value;
        assert_abs_diff_eq!(a, b, epsilon = 1e-4);
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let cfg = RoofConfig {
            max_dim: 3,
            ..RoofConfig::default()
        };
        assert!(matches!(
            coherence_of_formation(&DensityMatrix::maximally_mixed(4), &cfg),
            Err(CoherenceError::DimensionTooLarge { .. })
        ));
    }
}
