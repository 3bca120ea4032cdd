//! Coherence powers, generating-capacity bounds, the qubit rotation curve,
//! a pure-input diamond-norm lower bound and continuity checks.
//!
//! Every optimizer value here is the best point found by a seeded
//! multi-start search, so it is a lower bound on the supremum it targets.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channels::{apply_channel, channel_distance_choi, KrausChannel};
use crate::error::{CoherenceError, Result};
use crate::measures::{coherence_of_formation_value, entropy_of_coherence, relative_entropy_of_coherence, RoofConfig};
use crate::numerics::{
    binary_entropy_unchecked, c, g_function, isometry_defect, trace_norm_hermitian, ComplexMatrix, ComplexVector, ONE,
};
use crate::optimize::{golden_section_max, multistart_maximize, OptConfig};
use crate::random::SimRng;
use crate::states::{maximally_coherent, DensityMatrix, PureState};

/// Largest total dimension (`|A|·k` or `|B|·k`) for the formation measure.
pub const MAX_DIM_F: usize = 8;
/// Largest total dimension for the relative-entropy measure.
pub const MAX_DIM_R: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    /// Relative entropy of coherence.
    R,
    /// Coherence of formation.
    F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub opt: OptConfig,
    /// Convex-roof budget per objective evaluation.
    pub roof: RoofConfig,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            opt: OptConfig::default(),
            roof: RoofConfig::inner(),
        }
    }
}

impl PowerConfig {
    pub fn with_opt(opt: OptConfig) -> Self {
        Self {
            opt,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArgmaxState {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl ArgmaxState {
    pub fn density(&self) -> DensityMatrix {
        match self {
            ArgmaxState::Pure(p) => p.density(),
            ArgmaxState::Mixed(m) => m.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptResult {
    pub value: f64,
    pub argmax_state: ArgmaxState,
    pub restarts_used: usize,
    /// Gap between the best and second-best restart.
    pub best_residual: f64,
    pub seed: u64,
}

fn check_dims(t: &KrausChannel, measure: Measure, k: usize) -> Result<()> {
    if k == 0 {
        return Err(CoherenceError::Domain("ancilla dimension must be at least 1".into()));
    }
    let cap = match measure {
        Measure::R => MAX_DIM_R,
        Measure::F => MAX_DIM_F,
    };
    let dim = t.dim_in().max(t.dim_out()) * k;
    if dim > cap {
        return Err(CoherenceError::DimensionTooLarge { dim, max: cap });
    }
    Ok(())
}

fn pure_from_params(x: &[f64]) -> Option<PureState> {
    let v = ComplexVector::from_iterator(x.len() / 2, x.chunks_exact(2).map(|p| c(p[0], p[1])));
    PureState::normalized(v).ok()
}

fn mixed_from_params(x: &[f64], n: usize) -> Option<DensityMatrix> {
    let g = ComplexMatrix::from_row_iterator(n, n, x.chunks_exact(2).map(|p| c(p[0], p[1])));
    if g.norm() < 1e-150 {
        return None;
    }
    Some(DensityMatrix::from_gram_factor(&g))
}

fn pure_params(v: &ComplexVector) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Gram factor with `v` as its first column.
fn mixed_params_from_pure(v: &ComplexVector) -> Vec<f64> {
    let n = v.len();
    let mut g = ComplexMatrix::zeros(n, n);
    g.set_column(0, v);
    g.transpose().iter().flat_map(|z| [z.re, z.im]).collect()
}

fn gaussian_params(len: usize, r: &mut SimRng) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(r)).collect()
}

fn coherence_of(measure: Measure, state: &ArgmaxState, roof: &RoofConfig) -> Result<f64> {
    match (measure, state) {
        (_, ArgmaxState::Pure(p)) => Ok(entropy_of_coherence(p)),
        (Measure::R, ArgmaxState::Mixed(rho)) => Ok(relative_entropy_of_coherence(rho)),
        (Measure::F, ArgmaxState::Mixed(rho)) => coherence_of_formation_value(rho, roof),
    }
}

fn output_coherence(measure: Measure, out: &DensityMatrix, roof: &RoofConfig) -> Result<f64> {
    match measure {
        Measure::R => Ok(relative_entropy_of_coherence(out)),
        Measure::F => coherence_of_formation_value(out, roof),
    }
}

/// `C(T_k(ρ)) − C(ρ)` for an already extended channel `T_k`.
pub fn power_objective(extended: &KrausChannel, measure: Measure, state: &ArgmaxState, roof: &RoofConfig) -> Result<f64> {
    let before = coherence_of(measure, state, roof)?;
    let after = match state {
        ArgmaxState::Pure(p) if extended.kraus().len() == 1 => {
            let image = PureState::normalized(&extended.kraus()[0] * p.amplitudes())?;
            entropy_of_coherence(&image)
        }
        _ => output_coherence(measure, &apply_channel(extended, &state.density())?, roof)?,
    };
    Ok(after - before)
}

/// Re-evaluates the coherence-power objective of `t ⊗ id_k` at `state`.
pub fn evaluate_power(t: &KrausChannel, measure: Measure, ancilla_k: usize, state: &ArgmaxState, cfg: &PowerConfig) -> Result<f64> {
    check_dims(t, measure, ancilla_k)?;
    power_objective(&t.extend(ancilla_k), measure, state, &cfg.roof)
}

fn optimize_states<F>(n: usize, pure_only: bool, extra_starts: &[ComplexVector], cfg: &OptConfig, f: F) -> Result<OptResult>
where
    F: Fn(&ArgmaxState) -> Result<f64> + Sync,
{
    let decode = |x: &[f64]| -> Option<ArgmaxState> {
        if pure_only {
            pure_from_params(x).map(ArgmaxState::Pure)
        } else {
            mixed_from_params(x, n).map(ArgmaxState::Mixed)
        }
    };
    let objective = |x: &[f64]| decode(x).and_then(|s| f(&s).ok()).unwrap_or(f64::NEG_INFINITY);

    let mut seeds: Vec<ComplexVector> = (0..n)
        .map(|i| {
            let mut v = ComplexVector::zeros(n);
            v[i] = ONE;
            v
        })
        .collect();
    seeds.push(maximally_coherent(n)?.amplitudes().clone());
    seeds.extend(extra_starts.iter().cloned());
    let fixed: Vec<Vec<f64>> = seeds
        .iter()
        .map(|v| if pure_only { pure_params(v) } else { mixed_params_from_pure(v) })
        .collect();
    let len = if pure_only { 2 * n } else { 2 * n * n };
    let init = |r: &mut SimRng| gaussian_params(len, r);

    let out = multistart_maximize(&objective, &init, &fixed, cfg);
    let argmax_state = decode(&out.best.x)
        .ok_or_else(|| CoherenceError::Domain("optimizer returned a degenerate parametrization".into()))?;
    if !out.best.value.is_finite() {
        return Err(CoherenceError::Domain("objective could not be evaluated at any start".into()));
    }
    Ok(OptResult {
        value: out.best.value,
        argmax_state,
        restarts_used: out.restart_values.len(),
        best_residual: out.restart_gap,
        seed: cfg.seed,
    })
}

/// Maximal increase of the chosen measure under `t ⊗ id_k` over inputs on
/// `A ⊗ C^k` (pure inputs only when `pure_only`).
pub fn coherence_power(t: &KrausChannel, measure: Measure, pure_only: bool, ancilla_k: usize, cfg: &PowerConfig) -> Result<OptResult> {
    coherence_power_with_starts(t, measure, pure_only, ancilla_k, &[], cfg)
}

/// As [`coherence_power`], with additional pure starting points on `A ⊗ C^k`.
pub fn coherence_power_with_starts(
    t: &KrausChannel,
    measure: Measure,
    pure_only: bool,
    ancilla_k: usize,
    starts: &[ComplexVector],
    cfg: &PowerConfig,
) -> Result<OptResult> {
    check_dims(t, measure, ancilla_k)?;
    let extended = t.extend(ancilla_k);
    let n = t.dim_in() * ancilla_k;
    if let Some(s) = starts.iter().find(|s| s.len() != n) {
        return Err(CoherenceError::DimensionMismatch(format!("start of length {} for input dim {n}", s.len())));
    }
    optimize_states(n, pure_only, starts, &cfg.opt, |s| power_objective(&extended, measure, s, &cfg.roof))
}

/// Generating capacity of an isometry: best pure-input gain of `C_r`, with no
/// ancilla.
pub fn cgen_isometry(v: &ComplexMatrix, cfg: &OptConfig) -> Result<OptResult> {
    let defect = isometry_defect(v);
    if defect > 1e-9 {
        return Err(CoherenceError::NotIsometry(defect));
    }
    let n = v.ncols();
    optimize_states(n, true, &[], cfg, |s| match s {
        ArgmaxState::Pure(p) => {
            let image = PureState::normalized(v * p.amplitudes())?;
            Ok(entropy_of_coherence(&image) - entropy_of_coherence(p))
        }
        ArgmaxState::Mixed(_) => unreachable!("pure search"),
    })
}

/// Number of grid points used by [`qubit_cgen`].
pub const QUBIT_GRID: usize = 2000;

fn qubit_objective(alpha: f64, theta: f64) -> f64 {
    binary_entropy_unchecked((alpha + theta).cos().powi(2)) - binary_entropy_unchecked(alpha.cos().powi(2))
}

fn sin2_log_tan2(x: f64) -> f64 {
    let s = (2.0 * x).sin();
    if s.abs() < 1e-6 {
        return 0.0;
    }
    s * x.tan().powi(2).ln()
}

/// `sin(2α+2θ) ln tan²(α+θ) − sin(2α) ln tan²α`, each term replaced by its
/// limit 0 near the points where `sin` vanishes.
pub fn critical_point_residual(alpha: f64, theta: f64) -> f64 {
    sin2_log_tan2(alpha + theta) - sin2_log_tan2(alpha)
}

/// `C_gen(U(θ))` and the smallest maximizing input angle `α*` of
/// `h₂(cos²(α+θ)) − h₂(cos²α)`.
pub fn qubit_cgen(theta: f64) -> Result<(f64, f64)> {
    if !(0.0..=std::f64::consts::FRAC_PI_4 + 1e-15).contains(&theta) {
        return Err(CoherenceError::Domain(format!("theta must lie in [0, π/4], got {theta}")));
    }
    let pi = std::f64::consts::PI;
    let h = pi / (QUBIT_GRID - 1) as f64;
    let (mut best_i, mut best_v) = (0, f64::NEG_INFINITY);
    for i in 0..QUBIT_GRID {
        let v = qubit_objective(i as f64 * h, theta);
        if v > best_v {
            best_i = i;
            best_v = v;
        }
    }
    let grid_alpha = best_i as f64 * h;
    let lo = (grid_alpha - h).max(0.0);
    let hi = (grid_alpha + h).min(pi);
    let (refined, refined_v) = golden_section_max(|a| qubit_objective(a, theta), lo, hi, 1e-12);
    let (mut alpha, mut value) = if refined_v > best_v { (refined, refined_v) } else { (grid_alpha, best_v) };

    // The critical-point residual is a sign-changing multiple of the
    // derivative; bisect on it when it brackets a root near the maximizer.
    let r = |a: f64| critical_point_residual(a, theta);
    let delta = 1e-5;
    let (mut a, mut b) = (alpha - delta, alpha + delta);
    if a > 0.0 && r(a) * r(b) < 0.0 {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if r(a) * r(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        let polished = 0.5 * (a + b);
        let polished_v = qubit_objective(polished, theta);
        if polished_v >= value - 1e-15 {
            alpha = polished;
            value = value.max(polished_v);
        }
    }

    // f has period π/2; report the representative in [0, π/2).
    let half = std::f64::consts::FRAC_PI_2;
    alpha = alpha.rem_euclid(half);
    if half - alpha < 1e-9 {
        alpha = 0.0;
    }
    Ok((value, alpha))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityBounds {
    pub lower_pure: f64,
    /// Optimizer estimate; not a certified upper bound.
    pub upper_mixed_r: f64,
    /// Optimizer estimate; not a certified upper bound.
    pub upper_mixed_f: f64,
    pub sim_upper: f64,
    pub ancilla_k: usize,
    /// Best-vs-second-best restart gaps of the three searches.
    pub residuals: [f64; 3],
}

pub fn cgen_bounds(t: &KrausChannel, ancilla_k: usize, cfg: &PowerConfig) -> Result<CapacityBounds> {
    let lower = coherence_power(t, Measure::R, true, ancilla_k, cfg)?;
    let best_pure = match &lower.argmax_state {
        ArgmaxState::Pure(p) => p.amplitudes().clone(),
        ArgmaxState::Mixed(_) => unreachable!("pure search"),
    };
    let starts = [best_pure];
    let upper_r = coherence_power_with_starts(t, Measure::R, false, ancilla_k, &starts, cfg)?;
    let upper_f = coherence_power_with_starts(t, Measure::F, false, ancilla_k, &starts, cfg)?;
    Ok(CapacityBounds {
        lower_pure: lower.value,
        upper_mixed_r: upper_r.value,
        upper_mixed_f: upper_f.value,
        sim_upper: (t.dim_out() as f64).log2(),
        ancilla_k,
        residuals: [lower.best_residual, upper_r.best_residual, upper_f.best_residual],
    })
}

fn check_same_shape(a: &KrausChannel, b: &KrausChannel) -> Result<()> {
    if a.dim_in() != b.dim_in() || a.dim_out() != b.dim_out() {
        return Err(CoherenceError::DimensionMismatch(format!(
            "channels {}→{} and {}→{}",
            a.dim_in(),
            a.dim_out(),
            b.dim_in(),
            b.dim_out()
        )));
    }
    Ok(())
}

/// `‖((a − b) ⊗ id)(φ)‖₁` for a pure `φ` on `A ⊗ A`.
pub fn diamond_objective(a: &KrausChannel, b: &KrausChannel, phi: &PureState) -> Result<f64> {
    let k = a.dim_in();
    let rho = phi.density();
    let diff = apply_channel(&a.extend(k), &rho)?.into_matrix() - apply_channel(&b.extend(k), &rho)?.into_matrix();
    trace_norm_hermitian(&diff)
}

/// Lower bound on `‖a − b‖_⋄` from pure inputs on `A ⊗ A`. The maximally
/// entangled input is always among the starts.
pub fn diamond_lower(a: &KrausChannel, b: &KrausChannel, cfg: &OptConfig) -> Result<f64> {
    check_same_shape(a, b)?;
    let d = a.dim_in();
    let mut phi = ComplexVector::zeros(d * d);
    for m in 0..d {
        phi[m * d + m] = c(1.0 / (d as f64).sqrt(), 0.0);
    }
    let out = optimize_states(d * d, true, &[phi], cfg, |s| match s {
        ArgmaxState::Pure(p) => diamond_objective(a, b, p),
        ArgmaxState::Mixed(_) => unreachable!("pure search"),
    })?;
    Ok(out.value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub epsilon: f64,
    pub ancilla_k: usize,
    pub p_r: (f64, f64),
    pub p_f: (f64, f64),
    pub diff_r: f64,
    pub bound_r: f64,
    pub diff_f: f64,
    pub bound_f: f64,
    pub holds_r: bool,
    pub holds_f: bool,
}

/// Compares the coherence powers of `a ⊗ id_k` and `b ⊗ id_k` against the
/// continuity bounds `4ε log|B| + 2g(ε)` and `ε(log|B| + log k) + g(ε)` with
/// `ε = ½‖J(a) − J(b)‖₁`.
pub fn continuity_check(a: &KrausChannel, b: &KrausChannel, k: usize, cfg: &PowerConfig) -> Result<ContinuityReport> {
    check_same_shape(a, b)?;
    let (_, upper) = channel_distance_choi(a, b)?;
    let epsilon = 0.5 * upper;
    let log_b = (a.dim_out() as f64).log2();
    let g = g_function(epsilon)?;
    let bound_r = 4.0 * epsilon * log_b + 2.0 * g;
    let bound_f = epsilon * (log_b + (k as f64).log2()) + g;

    let pr_a = coherence_power(a, Measure::R, false, k, cfg)?.value;
    let pr_b = coherence_power(b, Measure::R, false, k, cfg)?.value;
    let pf_a = coherence_power(a, Measure::F, false, k, cfg)?.value;
    let pf_b = coherence_power(b, Measure::F, false, k, cfg)?.value;
    let diff_r = (pr_a - pr_b).abs();
    let diff_f = (pf_a - pf_b).abs();
    Ok(ContinuityReport {
        epsilon,
        ancilla_k: k,
        p_r: (pr_a, pr_b),
        p_f: (pf_a, pf_b),
        diff_r,
        bound_r,
        diff_f,
        bound_f,
        holds_r: diff_r <= bound_r,
        holds_f: diff_f <= bound_f,
    })
}
