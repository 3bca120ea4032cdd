//! Seeded multi-start Nelder–Mead search.
//!
//! Restarts are independent and run in parallel; restart `i` draws its start
//! from stream `i` of the configured seed, and the best restart is selected by
//! value with ties going to the lowest index, so results do not depend on
//! scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::random::{rng, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub restarts: usize,
    /// Nelder–Mead iterations per restart, summed over simplex re-inits.
    pub max_iters: usize,
    /// Converged once the best value improves by less than `stall_tol`
    /// over `stall_iters` consecutive iterations.
    pub stall_iters: usize,
    pub stall_tol: f64,
    pub initial_step: f64,
    pub seed: u64,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iters: 2000,
            stall_iters: 50,
            stall_tol: 1e-10,
            initial_step: 0.5,
            seed: 42,
        }
    }
}

impl OptConfig {
    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }
}

#[derive(Debug, Clone)]
pub struct LocalOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with the adaptive-parameter Nelder–Mead method.
/// After each stall the simplex is rebuilt around the incumbent; the search
/// ends when a rebuild no longer helps or the iteration budget runs out.
pub fn nelder_mead<F>(f: &F, x0: &[f64], cfg: &OptConfig) -> LocalOutcome
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let n = x0.len();
    if n == 0 {
        return LocalOutcome {
            x: vec![],
            value: f(x0),
            iterations: 0,
            converged: true,
        };
    }
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = if n > 2 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    let mut best_x = x0.to_vec();
    let mut best_v = f(x0);
    let mut iterations = 0;
    let mut step = cfg.initial_step;
    let mut converged = false;

    while iterations < cfg.max_iters {
        let value_at_rebuild = best_v;
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((best_x.clone(), best_v));
        for i in 0..n {
            let mut x = best_x.clone();
            x[i] += if x[i].abs() > 1e-3 { step * x[i].abs().max(0.1) } else { step };
            let v = f(&x);
            simplex.push((x, v));
        }

        let mut history_best = f64::INFINITY;
        let mut since_improvement = 0;
        let mut stalled = false;
        while iterations < cfg.max_iters {
            iterations += 1;
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let current_best = simplex[0].1;
            if history_best - current_best >= cfg.stall_tol {
                history_best = current_best;
                since_improvement = 0;
            } else {
                since_improvement += 1;
                if since_improvement >= cfg.stall_iters {
                    stalled = true;
                    break;
                }
            }
            let spread = simplex[n].1 - simplex[0].1;
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if spread.abs() < 1e-15 && diameter < 1e-12 {
                stalled = true;
                break;
            }

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / nf;
                }
            }
            let worst = simplex[n].clone();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };
            let xr = along(alpha);
            let fr = f(&xr);
            if fr < simplex[0].1 {
                let xe = along(alpha * beta);
                let fe = f(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < worst.1 {
                    let xc = along(alpha * gamma);
                    let fc = f(&xc);
                    (xc, fc)
                } else {
                    let xc = along(-gamma);
                    let fc = f(&xc);
                    (xc, fc)
                };
                if fc < worst.1.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    let x0 = simplex[0].0.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        let x: Vec<f64> = x0.iter().zip(&vertex.0).map(|(a, b)| a + delta * (b - a)).collect();
                        let v = f(&x);
                        *vertex = (x, v);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < best_v {
            best_x = simplex[0].0.clone();
            best_v = simplex[0].1;
        }
        if !stalled {
            break;
        }
        if value_at_rebuild - best_v < cfg.stall_tol {
            converged = true;
            break;
        }
        step = (step * 0.5).max(1e-4);
    }

    LocalOutcome {
        x: best_x,
        value: best_v,
        iterations,
        converged,
    }
}

#[derive(Debug, Clone)]
pub struct MultiStartOutcome {
    pub best: LocalOutcome,
    /// Final value of every restart, in restart order.
    pub restart_values: Vec<f64>,
    /// Gap between the best and second-best restart (0 for one restart).
    pub restart_gap: f64,
}

/// Maximizes `objective` from `fixed_starts` followed by `cfg.restarts`
/// random starts drawn with `init`.
pub fn multistart_maximize<F, G>(
    objective: &F,
    init: &G,
    fixed_starts: &[Vec<f64>],
    cfg: &OptConfig,
) -> MultiStartOutcome
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&mut SimRng) -> Vec<f64> + Sync,
{
    let neg = |x: &[f64]| -objective(x);
    let total = fixed_starts.len() + cfg.restarts.max(if fixed_starts.is_empty() { 1 } else { 0 });
    let runs: Vec<LocalOutcome> = (0..total)
        .into_par_iter()
        .map(|i| {
            let x0 = if i < fixed_starts.len() {
                fixed_starts[i].clone()
            } else {
                let mut r = rng(cfg.seed, i as u64);
                init(&mut r)
            };
            let mut out = nelder_mead(&neg, &x0, cfg);
            out.value = -out.value;
            out
        })
        .collect();

    let restart_values: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let mut best_idx = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.value > runs[best_idx].value {
            best_idx = i;
        }
    }
    let mut sorted = restart_values.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let restart_gap = if sorted.len() > 1 { sorted[0] - sorted[1] } else { 0.0 };
    MultiStartOutcome {
        best: runs[best_idx].clone(),
        restart_values,
        restart_gap,
    }
}

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn nelder_mead_finds_rosenbrock_minimum() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let cfg = OptConfig::default().with_max_iters(5000);
        let out = nelder_mead(&rosen, &[-1.2, 1.0], &cfg);
        assert!(out.value < 1e-8, "value {}", out.value);
        assert!((out.x[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn nelder_mead_quadratic_in_8_dims() {
        let f = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * (v - 0.5).powi(2)).sum::<f64>();
        let out = nelder_mead(&f, &[0.0; 8], &OptConfig::default().with_max_iters(20_000));
        assert!(out.value < 1e-9, "value {}", out.value);
    }

    #[test]
    fn multistart_escapes_local_maxima_and_is_deterministic() {
        // Two bumps; the taller one at x = 3.
        let f = |x: &[f64]| (-(x[0] + 2.0).powi(2)).exp() + 2.0 * (-(x[0] - 3.0).powi(2)).exp();
        let init = |r: &mut SimRng| vec![r.random_range(-5.0..5.0)];
        let cfg = OptConfig::default().with_restarts(8);
        let a = multistart_maximize(&f, &init, &[], &cfg);
        let b = multistart_maximize(&f, &init, &[], &cfg);
        assert!((a.best.x[0] - 3.0).abs() < 1e-4);
        assert_eq!(a.restart_values, b.restart_values);
        assert!(a.restart_gap >= 0.0);
    }

    #[test]
    fn golden_section_on_parabola() {
        let (x, v) = golden_section_max(|x| -(x - 0.3).powi(2), 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!(v.abs() < 1e-12);
    }
}
