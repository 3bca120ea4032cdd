//! CPTP maps as Kraus families, Choi matrices and incoherence classifiers.
//!
//! Classification is relative to the Kraus decomposition at hand: a channel
//! whose given operators fail the test may still admit an incoherent
//! decomposition, which is why the channel flags are named `*_witnessed`.

use serde::{Deserialize, Serialize};

use crate::error::{CoherenceError, Result};
use crate::numerics::{
    hermitian_eig, identity, kron, max_abs_diff, partial_trace, real, trace_norm_hermitian, ComplexMatrix, ONE,
};
use crate::random::{random_kraus, rng};
use crate::states::DensityMatrix;

pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Default threshold for structural zero tests.
pub const STRUCTURAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl KrausChannel {
    /// Validates shapes and `Σ K†K = 1` within 1e-9 entrywise.
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| CoherenceError::InvalidChannel("empty Kraus list".into()))?;
        let (dim_out, dim_in) = first.shape();
        if dim_in == 0 || dim_out == 0 {
            return Err(CoherenceError::InvalidChannel("zero-sized Kraus operator".into()));
        }
        if let Some(k) = kraus.iter().find(|k| k.shape() != (dim_out, dim_in)) {
            return Err(CoherenceError::InvalidChannel(format!(
                "Kraus operator of shape {:?} does not match {:?}",
                k.shape(),
                (dim_out, dim_in)
            )));
        }
        let channel = Self { dim_in, dim_out, kraus };
        let residual = channel.completeness_residual();
        if residual > COMPLETENESS_TOL {
            return Err(CoherenceError::InvalidChannel(format!(
                "completeness violated by {residual:.3e}"
            )));
        }
        Ok(channel)
    }

    /// Shape-consistent family that may violate completeness.
    pub(crate) fn new_unchecked(kraus: Vec<ComplexMatrix>) -> Self {
        let (dim_out, dim_in) = kraus[0].shape();
        Self { dim_in, dim_out, kraus }
    }

    pub fn identity(k: usize) -> Self {
        Self {
            dim_in: k,
            dim_out: k,
            kraus: vec![identity(k)],
        }
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    /// Completely dephasing channel with Kraus operators `{|i><i|}`.
    pub fn dephasing(d: usize) -> Self {
        let kraus = (0..d)
            .map(|i| {
                let mut k = ComplexMatrix::zeros(d, d);
                k[(i, i)] = ONE;
                k
            })
            .collect();
        Self {
            dim_in: d,
            dim_out: d,
            kraus,
        }
    }

    /// Qubit rotation `U(θ) = [[cos θ, −sin θ], [sin θ, cos θ]]` as a channel.
    pub fn rotation(theta: f64) -> Self {
        Self {
            dim_in: 2,
            dim_out: 2,
            kraus: vec![rotation_matrix(theta)],
        }
    }

    /// Seeded random channel with `count` Kraus operators sliced from a
    /// Haar isometry. Requires `dim_out · count ≥ dim_in`.
    pub fn random(dim_in: usize, dim_out: usize, count: usize, seed: u64) -> Result<Self> {
        if dim_out * count < dim_in || count == 0 {
            return Err(CoherenceError::InvalidChannel(format!(
                "{count} Kraus operators into dimension {dim_out} cannot be trace preserving on dimension {dim_in}"
            )));
        }
        Ok(Self {
            dim_in,
            dim_out,
            kraus: random_kraus(dim_in, dim_out, count, &mut rng(seed, 0)),
        })
    }

    /// Measure in the orthonormal basis `measurement` and prepare
    /// `outputs[k]` on outcome `k`.
    pub fn measure_and_prepare(measurement: &ComplexMatrix, outputs: &[DensityMatrix]) -> Result<Self> {
        if measurement.ncols() != outputs.len() {
            return Err(CoherenceError::DimensionMismatch(format!(
                "{} measurement vectors for {} prepared states",
                measurement.ncols(),
                outputs.len()
            )));
        }
        let mut kraus = Vec::new();
        for (k, sigma) in outputs.iter().enumerate() {
            let eig = hermitian_eig(sigma.matrix())?;
            let bra = measurement.column(k).adjoint();
            for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
                if lambda > 1e-14 {
                    kraus.push(eig.eigenvectors.column(j) * &bra * real(lambda.sqrt()));
                }
            }
        }
        Self::new(kraus)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn into_kraus(self) -> Vec<ComplexMatrix> {
        self.kraus
    }

    /// `max |Σ K†K − 1|`.
    pub fn completeness_residual(&self) -> f64 {
        let mut sum = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            sum += k.adjoint() * k;
        }
        max_abs_diff(&sum, &identity(self.dim_in))
    }

    /// `Σ K X K†` for an arbitrary `dim_in × dim_in` operator `X`.
    pub fn apply_operator(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.shape() != (self.dim_in, self.dim_in) {
            return Err(CoherenceError::DimensionMismatch(format!(
                "channel input dimension {} vs operator {:?}",
                self.dim_in,
                x.shape()
            )));
        }
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        Ok(out)
    }

    /// `T ⊗ id_k`.
    pub fn extend(&self, k: usize) -> KrausChannel {
        tensor_channels(self, &KrausChannel::identity(k))
    }
}

pub fn rotation_matrix(theta: f64) -> ComplexMatrix {
    let (s, c) = theta.sin_cos();
    ComplexMatrix::from_row_slice(2, 2, &[real(c), real(-s), real(s), real(c)])
}

/// `T(ρ) = Σ K ρ K†`.
pub fn apply_channel(t: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_trusted(t.apply_operator(rho.matrix())?))
}

/// Unnormalized Choi matrix `Σ_ij |i><j| ⊗ T(|i><j|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    pub dim_in: usize,
    pub dim_out: usize,
    pub mat: ComplexMatrix,
}

impl ChoiMatrix {
    /// `max |tr_out J − 1|`.
    pub fn marginal_residual(&self) -> f64 {
        let marginal = partial_trace(&self.mat, &[self.dim_in, self.dim_out], 1).expect("Choi dimensions are consistent");
        max_abs_diff(&marginal, &identity(self.dim_in))
    }
}

pub fn choi_matrix(t: &KrausChannel) -> ChoiMatrix {
    let (din, dout) = (t.dim_in, t.dim_out);
    let n = din * dout;
    let mut mat = ComplexMatrix::zeros(n, n);
    for k in &t.kraus {
        // (1 ⊗ K)|Ω>, |Ω> = Σ_i |i>|i>.
        let v = crate::numerics::ComplexVector::from_fn(n, |row, _| {
            let (i, b) = (row / dout, row % dout);
            k[(b, i)]
        });
        mat += &v * v.adjoint();
    }
    ChoiMatrix {
        dim_in: din,
        dim_out: dout,
        mat,
    }
}

/// Diamond-norm bracket from the Choi trace norm:
/// `‖J(a) − J(b)‖₁ / dim_in ≤ ‖a − b‖_⋄ ≤ ‖J(a) − J(b)‖₁`.
pub fn channel_distance_choi(a: &KrausChannel, b: &KrausChannel) -> Result<(f64, f64)> {
    if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out) {
        return Err(CoherenceError::DimensionMismatch(format!(
            "{}→{} vs {}→{}",
            a.dim_in, a.dim_out, b.dim_in, b.dim_out
        )));
    }
    let diff = choi_matrix(a).mat - choi_matrix(b).mat;
    let upper = trace_norm_hermitian(&diff)?;
    Ok((upper / a.dim_in as f64, upper))
}

/// At most one entry per column above `tol`, i.e. `K Δ K† ⊂ Δ`.
pub fn operator_is_incoherent(k: &ComplexMatrix, tol: f64) -> bool {
    k.column_iter().all(|col| col.iter().filter(|z| z.norm() > tol).count() <= 1)
}

/// Incoherent and at most one entry per row above `tol`.
pub fn operator_is_strictly_incoherent(k: &ComplexMatrix, tol: f64) -> bool {
    operator_is_incoherent(k, tol) && k.row_iter().all(|row| row.iter().filter(|z| z.norm() > tol).count() <= 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorClass {
    pub incoherent: bool,
    pub strictly_incoherent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausClassification {
    pub per_operator: Vec<OperatorClass>,
    #[serde(rename = "channel_is_IO_witnessed")]
    pub channel_is_io_witnessed: bool,
    #[serde(rename = "channel_is_SIO_witnessed")]
    pub channel_is_sio_witnessed: bool,
}

pub fn classify_kraus(t: &KrausChannel, tol: f64) -> KrausClassification {
    classify_operators(&t.kraus, tol)
}

pub fn classify_operators(kraus: &[ComplexMatrix], tol: f64) -> KrausClassification {
    let per_operator: Vec<OperatorClass> = kraus
        .iter()
        .map(|k| OperatorClass {
            incoherent: operator_is_incoherent(k, tol),
            strictly_incoherent: operator_is_strictly_incoherent(k, tol),
        })
        .collect();
    KrausClassification {
        channel_is_io_witnessed: per_operator.iter().all(|c| c.incoherent),
        channel_is_sio_witnessed: per_operator.iter().all(|c| c.strictly_incoherent),
        per_operator,
    }
}

/// Maximally incoherent: every basis projector is mapped into Δ. By
/// linearity and convexity this covers all of Δ.
pub fn is_mio(t: &KrausChannel, tol: f64) -> bool {
    (0..t.dim_in).all(|i| {
        let out = apply_channel(t, &DensityMatrix::basis(t.dim_in, i)).expect("basis state matches input dimension");
        out.max_off_diagonal() <= tol
    })
}

/// Kraus family `{A_i ⊗ B_j}`.
pub fn tensor_channels(a: &KrausChannel, b: &KrausChannel) -> KrausChannel {
    let kraus = a
        .kraus
        .iter()
        .flat_map(|ka| b.kraus.iter().map(move |kb| kron(ka, kb)))
        .collect();
    KrausChannel {
        dim_in: a.dim_in * b.dim_in,
        dim_out: a.dim_out * b.dim_out,
        kraus,
    }
}

/// A qubit-to-`C^4` channel that preserves Δ yet raises the coherence of
/// formation: measure in `{|+>, |−>}` and prepare the flower state built
/// from `±F₂`. Incoherent inputs land on `1/4`.
pub fn flower_mio_channel() -> KrausChannel {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let pm = ComplexMatrix::from_row_slice(2, 2, &[real(s), real(s), real(s), real(-s)]);
    let plus = crate::states::flower_state(2).expect("d = 2 is valid");
    // Flipping the sign of the off-diagonal blocks is conjugation by diag(1,1,−1,−1).
    let flip = crate::numerics::diag(&[1.0, 1.0, -1.0, -1.0]);
    let minus = DensityMatrix::from_trusted(&flip * plus.matrix() * &flip);
    KrausChannel::measure_and_prepare(&pm, &[plus, minus]).expect("valid measure-and-prepare channel")
}
