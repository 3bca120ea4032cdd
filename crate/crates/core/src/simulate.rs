//! Exact simulation of channels by incoherent operations that consume a
//! maximally coherent resource, plus the qubit-resource feasibility test for
//! qubit rotations.
//!
//! Every protocol acts on `input ⊗ resource`; the first output factor carries
//! the simulated output and all remaining output factors are discarded.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channels::{
    channel_distance_choi, classify_operators, KrausChannel, KrausClassification, STRUCTURAL_TOL,
};
use crate::error::{CoherenceError, Result};
use crate::numerics::{c, complete_to_unitary, isometry_defect, kron, real, ComplexMatrix, ComplexVector, ONE, ZERO};
use crate::states::{maximally_coherent, PureState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// One Ψ_d per d-dimensional unitary.
    Unitary,
    /// Teleportation of the channel output through Φ_{|B|}.
    Teleport,
    /// Unitary dilation simulated with Ψ_{|A||B|}.
    Sio,
}

/// Tensor layout of a protocol: inputs are `[system, resource]`, outputs are
/// listed factor by factor and only factor 0 is kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registers {
    pub input: Vec<usize>,
    pub output: Vec<usize>,
    pub keep: usize,
}

#[derive(Debug, Clone)]
pub struct SimulationBundle {
    pub protocol: Protocol,
    pub target: KrausChannel,
    pub resource: PureState,
    /// Kraus family on `input ⊗ resource`.
    pub protocol_kraus: KrausChannel,
    pub registers: Registers,
    /// All protocol Kraus operators pass the strict incoherence test.
    pub strict: bool,
}

impl SimulationBundle {
    fn assemble(
        protocol: Protocol,
        target: KrausChannel,
        resource: PureState,
        kraus: Vec<ComplexMatrix>,
        registers: Registers,
    ) -> Result<Self> {
        let protocol_kraus = KrausChannel::new(kraus)?;
        let strict = classify_operators(protocol_kraus.kraus(), STRUCTURAL_TOL).channel_is_sio_witnessed;
        Ok(Self {
            protocol,
            target,
            resource,
            protocol_kraus,
            registers,
            strict,
        })
    }

    /// The map `ρ ↦ tr_discarded P(ρ ⊗ |r><r|)`, as a Kraus channel.
    pub fn induced_channel(&self) -> Result<KrausChannel> {
        let kept = self.registers.output[self.registers.keep];
        let discarded: usize = self.registers.output.iter().product::<usize>() / kept;
        let dim_in = self.registers.input[0];
        let attach = kron(&ComplexMatrix::identity(dim_in, dim_in), &column(self.resource.amplitudes()));
        let mut kraus = Vec::new();
        for k in self.protocol_kraus.kraus() {
            let prepared = k * &attach;
            for e in 0..discarded {
                let branch = ComplexMatrix::from_fn(kept, dim_in, |b, a| prepared[(b * discarded + e, a)]);
                if branch.iter().any(|z| z.norm() > 0.0) {
                    kraus.push(branch);
                }
            }
        }
        KrausChannel::new(kraus)
    }

    /// Unnormalized output `K(φ ⊗ r)` of one protocol Kraus operator.
    pub fn branch(&self, index: usize, phi: &PureState) -> ComplexVector {
        let input = phi.amplitudes().kronecker(self.resource.amplitudes());
        &self.protocol_kraus.kraus()[index] * input
    }
}

fn column(v: &ComplexVector) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    isometry_defect(u).max(isometry_defect(&u.adjoint()))
}

/// Kraus operators `K_α = Σ_ij U_ij |i><j| ⊗ |α><i+α mod d|`.
pub fn unitary_protocol_kraus(u: &ComplexMatrix) -> Vec<ComplexMatrix> {
    let d = u.nrows();
    (0..d)
        .map(|alpha| {
            let mut k = ComplexMatrix::zeros(d * d, d * d);
            for i in 0..d {
                let q = (i + alpha) % d;
                for j in 0..d {
                    k[(i * d + alpha, j * d + q)] = u[(i, j)];
                }
            }
            k
        })
        .collect()
}

/// Simulates a `d × d` unitary with one copy of `Ψ_d`.
pub fn build_unitary_sim(u: &ComplexMatrix) -> Result<SimulationBundle> {
    if !u.is_square() {
        return Err(CoherenceError::NotSquare {
            rows: u.nrows(),
            cols: u.ncols(),
        });
    }
    let defect = unitarity_defect(u);
    if defect > 1e-9 {
        return Err(CoherenceError::NotUnitary(defect));
    }
    let d = u.nrows();
    SimulationBundle::assemble(
        Protocol::Unitary,
        KrausChannel::unitary(u.clone())?,
        maximally_coherent(d)?,
        unitary_protocol_kraus(u),
        Registers {
            input: vec![d, d],
            output: vec![d, d],
            keep: 0,
        },
    )
}

/// Phase and shift unitaries `Z = diag(ω^m)`, `X|m> = |m+1 mod d>`.
pub fn generalized_paulis(d: usize) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if d == 0 {
        return Err(CoherenceError::Domain("dimension must be at least 1".into()));
    }
    let z = ComplexMatrix::from_fn(d, d, |i, j| if i == j { root_of_unity(i, d) } else { ZERO });
    let x = ComplexMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { ONE } else { ZERO });
    Ok((z, x))
}

fn root_of_unity(power: usize, d: usize) -> num_complex::Complex64 {
    let phase = 2.0 * std::f64::consts::PI * (power % d) as f64 / d as f64;
    c(phase.cos(), phase.sin())
}

fn matrix_power(m: &ComplexMatrix, p: usize) -> ComplexMatrix {
    (0..p).fold(ComplexMatrix::identity(m.nrows(), m.ncols()), |acc, _| acc * m)
}

/// `Z^j X^k`.
pub fn pauli_word(j: usize, k: usize, d: usize) -> Result<ComplexMatrix> {
    if j >= d || k >= d {
        return Err(CoherenceError::Domain(format!("indices ({j},{k}) out of range for d = {d}")));
    }
    let (z, x) = generalized_paulis(d)?;
    Ok(matrix_power(&z, j) * matrix_power(&x, k))
}

/// `|Φ^{(jk)}> = (1 ⊗ Z^j X^k)|Φ_d>`, `|Φ_d> = Σ_m |mm>/√d`.
pub fn bell_state(j: usize, k: usize, d: usize) -> Result<PureState> {
    let w = pauli_word(j, k, d)?;
    let phi = maximally_entangled(d);
    PureState::new(kron(&ComplexMatrix::identity(d, d), &w) * phi.amplitudes())
}

/// `Φ_d` as a vector on `C^d ⊗ C^d`.
pub fn maximally_entangled(d: usize) -> PureState {
    let mut v = ComplexVector::zeros(d * d);
    for m in 0..d {
        v[m * d + m] = real(1.0 / (d as f64).sqrt());
    }
    PureState::new(v).expect("unit norm by construction")
}

/// Teleportation correction for Bell outcome `jk`: the inverse of
/// `conj(Z^j X^k)`, i.e. `X^{-k} Z^j`. Monomial, hence incoherent.
pub fn teleport_correction(j: usize, k: usize, d: usize) -> Result<ComplexMatrix> {
    let w = pauli_word(j, k, d)?;
    Ok(w.map(|z| z.conj()).adjoint())
}

/// Protocol Kraus operators `L_{jkα} = [<Φ^{(jk)}|(K_α ⊗ 1)] ⊗ V_{jk}` on
/// `A ⊗ B′ ⊗ B″`, with corrections `V_{jk}` supplied by `correction`.
pub fn teleport_protocol_kraus<F>(t: &KrausChannel, correction: F) -> Result<Vec<ComplexMatrix>>
where
    F: Fn(usize, usize) -> Result<ComplexMatrix>,
{
    let (din, d) = (t.dim_in(), t.dim_out());
    let mut out = Vec::with_capacity(d * d * t.kraus().len());
    for j in 0..d {
        for k in 0..d {
            let bell = bell_state(j, k, d)?;
            let v = correction(j, k)?;
            for ka in t.kraus() {
                // Row functional on A ⊗ B′: Σ_b conj(Φ^{jk}_{b b′}) K_α[b, a].
                let row = ComplexMatrix::from_fn(1, din * d, |_, col| {
                    let (a, bp) = (col / d, col % d);
                    (0..d).map(|b| bell.amplitudes()[b * d + bp].conj() * ka[(b, a)]).sum()
                });
                out.push(kron(&row, &v));
            }
        }
    }
    Ok(out)
}

/// Simulates an arbitrary channel `A → B` with incoherent operations and the
/// resource `Φ_{|B|} = Σ_m |m>|m>/√|B|` on `B′B″`, which has the coherence of
/// `Ψ_{|B|}`.
pub fn build_teleport_sim(t: &KrausChannel) -> Result<SimulationBundle> {
    let d = t.dim_out();
    let kraus = teleport_protocol_kraus(t, |j, k| teleport_correction(j, k, d))?;
    SimulationBundle::assemble(
        Protocol::Teleport,
        t.clone(),
        maximally_entangled(d),
        kraus,
        Registers {
            input: vec![t.dim_in(), d * d],
            output: vec![d],
            keep: 0,
        },
    )
}

/// Unitary `U` on `A ⊗ B → B ⊗ A` with `U|j>|0> = Σ_α K_α|j> ⊗ |α>`; the
/// remaining columns come from Gram–Schmidt over the canonical basis.
pub fn dilation_unitary(t: &KrausChannel) -> Result<ComplexMatrix> {
    let (a, b) = (t.dim_in(), t.dim_out());
    let count = t.kraus().len();
    if count > a {
        return Err(CoherenceError::TooManyKraus { count, max: a });
    }
    let d = a * b;
    let iso = ComplexMatrix::from_fn(d, a, |row, j| {
        let (out, env) = (row / a, row % a);
        if env < count {
            t.kraus()[env][(out, j)]
        } else {
            ZERO
        }
    });
    let completed = complete_to_unitary(&iso, 1e-10)?;
    let mut extra = (a..d).map(|c| completed.column(c).into_owned());
    let mut u = ComplexMatrix::zeros(d, d);
    for col in 0..d {
        if col % b == 0 {
            u.set_column(col, &iso.column(col / b));
        } else {
            let v = extra
                .next()
                .ok_or_else(|| CoherenceError::Completion("ran out of completion vectors".into()))?;
            u.set_column(col, &v);
        }
    }
    let defect = unitarity_defect(&u);
    if defect > 1e-9 {
        return Err(CoherenceError::Completion(format!("completed matrix off unitary by {defect:.3e}")));
    }
    Ok(u)
}

/// Simulates a channel with at most `|A|` Kraus operators through its unitary
/// dilation, consuming `Ψ_{|A||B|}`. The environment ancilla starts in `|0>`,
/// which is folded into the protocol Kraus operators.
pub fn build_sio_dilation_sim(t: &KrausChannel) -> Result<SimulationBundle> {
    let (a, b) = (t.dim_in(), t.dim_out());
    let u = dilation_unitary(t)?;
    let d = a * b;
    // |j>_A |r>_R ↦ |j>_A |0>_B |r>_R
    let embed = ComplexMatrix::from_fn(d * d, a * d, |row, col| {
        let (j, r) = (col / d, col % d);
        if row == (j * b) * d + r {
            ONE
        } else {
            ZERO
        }
    });
    let kraus = unitary_protocol_kraus(&u).into_iter().map(|k| k * &embed).collect();
    SimulationBundle::assemble(
        Protocol::Sio,
        t.clone(),
        maximally_coherent(d)?,
        kraus,
        Registers {
            input: vec![a, d],
            output: vec![b, a, d],
            keep: 0,
        },
    )
}

pub fn build_simulation(t: &KrausChannel, protocol: Protocol) -> Result<SimulationBundle> {
    match protocol {
        Protocol::Unitary => {
            if t.kraus().len() != 1 || t.dim_in() != t.dim_out() {
                return Err(CoherenceError::InvalidChannel(
                    "unitary protocol needs a single square Kraus operator".into(),
                ));
            }
            build_unitary_sim(&t.kraus()[0])
        }
        Protocol::Teleport => build_teleport_sim(t),
        Protocol::Sio => build_sio_dilation_sim(t),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyTolerances {
    pub completeness: f64,
    pub choi: f64,
    pub structural: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self {
            completeness: 1e-9,
            choi: 1e-8,
            structural: STRUCTURAL_TOL,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationReport {
    pub completeness_residual: f64,
    pub choi_lower: f64,
    pub choi_upper: f64,
    pub classification: KrausClassification,
    pub strict: bool,
    /// Completeness and Choi distance within tolerance and every protocol
    /// Kraus operator incoherent.
    pub pass: bool,
}

pub fn verify_simulation(b: &SimulationBundle, tol: &VerifyTolerances) -> Result<SimulationReport> {
    let completeness_residual = completeness_of(b.protocol_kraus.kraus(), b.protocol_kraus.dim_in());
    let induced = b.induced_channel();
    let (choi_lower, choi_upper) = match induced {
        Ok(ch) => channel_distance_choi(&ch, &b.target)?,
        Err(_) => (f64::INFINITY, f64::INFINITY),
    };
    let classification = classify_operators(b.protocol_kraus.kraus(), tol.structural);
    let strict = classification.channel_is_sio_witnessed;
    let pass = completeness_residual <= tol.completeness
        && choi_upper <= tol.choi
        && classification.channel_is_io_witnessed;
    Ok(SimulationReport {
        completeness_residual,
        choi_lower,
        choi_upper,
        classification,
        strict,
        pass,
    })
}

fn completeness_of(kraus: &[ComplexMatrix], dim_in: usize) -> f64 {
    let mut sum = ComplexMatrix::zeros(dim_in, dim_in);
    for k in kraus {
        sum += k.adjoint() * k;
    }
    crate::numerics::max_abs_diff(&sum, &ComplexMatrix::identity(dim_in, dim_in))
}

impl SimulationBundle {
    /// Replaces one protocol Kraus entry without re-validating, for
    /// perturbation tests of [`verify_simulation`].
    pub fn perturbed(&self, kraus_index: usize, row: usize, col: usize, delta: f64) -> SimulationBundle {
        let mut kraus = self.protocol_kraus.kraus().to_vec();
        kraus[kraus_index][(row, col)] += real(delta);
        let mut out = self.clone();
        out.protocol_kraus = KrausChannel::new_unchecked(kraus);
        out
    }
}

/// Outcome of the qubit-resource test for implementing `U(θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub theta: f64,
    pub resource_amplitudes: (f64, f64),
    /// Minimum of `‖Σ p_i R_i†R_i − 1‖²_F + ‖Σ p_i R_i‖²_F` over the simplex.
    pub residual: f64,
    pub probabilities: [f64; 4],
}

/// The four residual operators `R_i` for resource `c′|0> + s′|1>`.
pub fn feasibility_operators(theta: f64, c_prime: f64) -> [ComplexMatrix; 4] {
    let (s, c) = theta.sin_cos();
    let sp = (1.0 - c_prime * c_prime).sqrt();
    let (cs, sc) = (c_prime / sp, sp / c_prime);
    let m = |a: f64, b: f64, e: f64, f: f64| ComplexMatrix::from_row_slice(2, 2, &[real(a), real(b), real(e), real(f)]);
    [
        m(c * sc, -s * cs, s * cs, c * sc),
        m(-c * cs, s * sc, -s * sc, -c * cs),
        m(-c * cs, -s * cs, -s * sc, c * sc),
        m(c * sc, s * sc, s * cs, -c * cs),
    ]
}

/// Least-squares feasibility of the completeness conditions over
/// probability vectors `p_i = |λ_i|²`, solved exactly by enumerating the
/// faces of the simplex.
pub fn qubit_resource_feasibility(theta: f64, c_prime: f64) -> Result<FeasibilityReport> {
    if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_4 + 1e-15) {
        return Err(CoherenceError::Domain(format!("theta must lie in (0, π/4], got {theta}")));
    }
    if !(c_prime > 0.0 && c_prime < 1.0) {
        return Err(CoherenceError::Domain(format!("c' must lie in (0, 1), got {c_prime}")));
    }
    let ops = feasibility_operators(theta, c_prime);
    // Real columns a_i = vec(R_i†R_i, R_i); target b = vec(1, 0).
    let stack = |first: &ComplexMatrix, second: &ComplexMatrix| -> DVector<f64> {
        let mut v = Vec::with_capacity(16);
        for m in [first, second] {
            for z in m.iter() {
                v.push(z.re);
                v.push(z.im);
            }
        }
        DVector::from_vec(v)
    };
    let columns: Vec<DVector<f64>> = ops.iter().map(|r| stack(&(r.adjoint() * r), r)).collect();
    let target = stack(&ComplexMatrix::identity(2, 2), &ComplexMatrix::zeros(2, 2));
    let objective = |p: &[f64; 4]| -> f64 {
        let mut v = -target.clone();
        for (pi, a) in p.iter().zip(&columns) {
            v += a * *pi;
        }
        v.norm_squared()
    };

    let mut best: Option<([f64; 4], f64)> = None;
    for mask in 1u32..16 {
        let support: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
        let n = support.len();
        // Eliminate Σ p = 1 via p_last = 1 − Σ t and solve the reduced
        // least-squares problem with a relative singular-value cutoff.
        let last = columns[support[n - 1]].clone();
        let mut sol = vec![1.0];
        if n > 1 {
            let m = DMatrix::<f64>::from_fn(last.len(), n - 1, |row, j| columns[support[j]][row] - last[row]);
            let rhs = &target - &last;
            let svd = m.svd(true, true);
            let cutoff = 1e-12 * svd.singular_values.max();
            let Ok(t) = svd.solve(&rhs, cutoff) else {
                continue;
            };
            sol = t.iter().copied().collect();
            sol.push(1.0 - t.sum());
        }
        if sol.iter().any(|x| *x < -1e-12 || !x.is_finite()) {
            continue;
        }
        let mut p = [0.0; 4];
        for (r, &i) in support.iter().enumerate() {
            p[i] = sol[r].max(0.0);
        }
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        let value = objective(&p);
        if best.as_ref().is_none_or(|(_, v)| value < *v) {
            best = Some((p, value));
        }
    }
    let (probabilities, residual) =
        best.ok_or_else(|| CoherenceError::Domain("no feasible face found for the simplex problem".into()))?;
    Ok(FeasibilityReport {
        theta,
        resource_amplitudes: (c_prime, (1.0 - c_prime * c_prime).sqrt()),
        residual: residual.max(0.0),
        probabilities,
    })
}

/// Grid of `points` resource amplitudes: uniform on `[lo, hi]` with
/// `1/√2` inserted (replacing the nearest uniform point) so the balanced
/// resource is always sampled.
pub fn feasibility_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let balanced = std::f64::consts::FRAC_1_SQRT_2;
    let mut grid: Vec<f64> = (0..points)
        .map(|i| {
            if points == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (points - 1) as f64
            }
        })
        .collect();
    if (lo..=hi).contains(&balanced) {
        let nearest = (0..grid.len())
            .min_by(|&a, &b| (grid[a] - balanced).abs().total_cmp(&(grid[b] - balanced).abs()))
            .expect("non-empty grid");
        grid[nearest] = balanced;
    }
    grid.sort_by(f64::total_cmp);
    grid
}

pub fn feasibility_scan(theta: f64, grid: &[f64]) -> Result<Vec<FeasibilityReport>> {
    grid.iter().map(|&cp| qubit_resource_feasibility(theta, cp)).collect()
}
