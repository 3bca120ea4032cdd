//! JSON file formats for matrices, states, channels and simulation bundles.
//!
//! Matrices are `{"rows", "cols", "re", "im"}` with row-major parts. States
//! add `"dim"`; a pure state is a `dim × 1` column. Channels are
//! `{"dim_in", "dim_out", "kraus": [matrix, ...]}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channels::{classify_operators, KrausChannel, STRUCTURAL_TOL};
use crate::error::{CoherenceError, Result};
use crate::numerics::{c, ComplexMatrix, ComplexVector};
use crate::simulate::{Protocol, Registers, SimulationBundle};
use crate::states::{DensityMatrix, PureState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        Self { rows, cols, re, im }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let n = self.rows * self.cols;
        if self.re.len() != n || self.im.len() != n {
            return Err(CoherenceError::Format(format!(
                "{}x{} matrix needs {n} real and imaginary parts, got {} and {}",
                self.rows,
                self.cols,
                self.re.len(),
                self.im.len()
            )));
        }
        if self.re.iter().chain(&self.im).any(|x| !x.is_finite()) {
            return Err(CoherenceError::Format("matrix entries must be finite".into()));
        }
        Ok(ComplexMatrix::from_row_iterator(
            self.rows,
            self.cols,
            self.re.iter().zip(&self.im).map(|(&r, &i)| c(r, i)),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub dim: usize,
    #[serde(flatten)]
    pub matrix: MatrixJson,
}

#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl State {
    pub fn dim(&self) -> usize {
        match self {
            State::Pure(p) => p.dim(),
            State::Mixed(m) => m.dim(),
        }
    }

    pub fn density(&self) -> DensityMatrix {
        match self {
            State::Pure(p) => p.density(),
            State::Mixed(m) => m.clone(),
        }
    }
}

impl StateJson {
    pub fn from_pure(p: &PureState) -> Self {
        let col = ComplexMatrix::from_column_slice(p.dim(), 1, p.amplitudes().as_slice());
        Self {
            dim: p.dim(),
            matrix: MatrixJson::from_matrix(&col),
        }
    }

    pub fn from_density(rho: &DensityMatrix) -> Self {
        Self {
            dim: rho.dim(),
            matrix: MatrixJson::from_matrix(rho.matrix()),
        }
    }

    /// Validates the state; columns of width 1 are read as pure states.
    pub fn to_state(&self) -> Result<State> {
        let m = self.matrix.to_matrix()?;
        if m.nrows() != self.dim {
            return Err(CoherenceError::Format(format!(
                "dim {} does not match {} rows",
                self.dim,
                m.nrows()
            )));
        }
        match m.ncols() {
            1 => Ok(State::Pure(PureState::new(ComplexVector::from_column_slice(m.as_slice()))?)),
            n if n == self.dim => Ok(State::Mixed(DensityMatrix::new(m)?)),
            n => Err(CoherenceError::Format(format!(
                "state must be {d}x1 or {d}x{d}, got {d}x{n}",
                d = self.dim
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelJson {
    pub dim_in: usize,
    pub dim_out: usize,
    pub kraus: Vec<MatrixJson>,
}

impl ChannelJson {
    pub fn from_channel(t: &KrausChannel) -> Self {
        Self {
            dim_in: t.dim_in(),
            dim_out: t.dim_out(),
            kraus: t.kraus().iter().map(MatrixJson::from_matrix).collect(),
        }
    }

    fn kraus_matrices(&self) -> Result<Vec<ComplexMatrix>> {
        let kraus = self.kraus.iter().map(MatrixJson::to_matrix).collect::<Result<Vec<_>>>()?;
        if let Some(k) = kraus.iter().find(|k| k.shape() != (self.dim_out, self.dim_in)) {
            return Err(CoherenceError::Format(format!(
                "Kraus operator of shape {:?}, expected {}x{}",
                k.shape(),
                self.dim_out,
                self.dim_in
            )));
        }
        Ok(kraus)
    }

    pub fn to_channel(&self) -> Result<KrausChannel> {
        KrausChannel::new(self.kraus_matrices()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleJson {
    pub protocol: Protocol,
    #[serde(flatten)]
    pub channel: ChannelJson,
    pub resource: StateJson,
    pub registers: Registers,
    pub target: ChannelJson,
    pub strict: bool,
}

impl BundleJson {
    pub fn from_bundle(b: &SimulationBundle) -> Self {
        Self {
            protocol: b.protocol,
            channel: ChannelJson::from_channel(&b.protocol_kraus),
            resource: StateJson::from_pure(&b.resource),
            registers: b.registers.clone(),
            target: ChannelJson::from_channel(&b.target),
            strict: b.strict,
        }
    }

    /// Rebuilds the bundle; the stored `strict` flag is recomputed rather
    /// than trusted.
    pub fn to_bundle(&self) -> Result<SimulationBundle> {
        let protocol_kraus = self.channel.to_channel()?;
        let resource = match self.resource.to_state()? {
            State::Pure(p) => p,
            State::Mixed(_) => return Err(CoherenceError::Format("bundle resource must be a pure state".into())),
        };
        let r = &self.registers;
        let input: usize = r.input.iter().product();
        let output: usize = r.output.iter().product();
        if r.input.len() != 2
            || r.input[1] != resource.dim()
            || input != protocol_kraus.dim_in()
            || output != protocol_kraus.dim_out()
            || r.keep >= r.output.len()
        {
            return Err(CoherenceError::Format(format!("registers {r:?} do not fit the protocol operators")));
        }
        let target = self.target.to_channel()?;
        if target.dim_in() != r.input[0] || target.dim_out() != r.output[r.keep] {
            return Err(CoherenceError::Format("target dimensions do not match the registers".into()));
        }
        let strict = classify_operators(protocol_kraus.kraus(), STRUCTURAL_TOL).channel_is_sio_witnessed;
        Ok(SimulationBundle {
            protocol: self.protocol,
            target,
            resource,
            protocol_kraus,
            registers: self.registers.clone(),
            strict,
        })
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_state(path: &Path) -> Result<State> {
    read_json::<StateJson>(path)?.to_state()
}

pub fn read_channel(path: &Path) -> Result<KrausChannel> {
    read_json::<ChannelJson>(path)?.to_channel()
}
