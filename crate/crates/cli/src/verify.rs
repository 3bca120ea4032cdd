use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

use serde::Serialize;

use coherence::channels::{flower_mio_channel, KrausChannel};
use coherence::measures::{coherence_of_formation, relative_entropy_of_coherence, RoofConfig};
use coherence::numerics::binary_entropy;
use coherence::optimize::OptConfig;
use coherence::power::{coherence_power, critical_point_residual, qubit_cgen, Measure, PowerConfig};
use coherence::random::{haar_unitary, rng};
use coherence::simulate::{
    build_simulation, feasibility_grid, feasibility_scan, verify_simulation, Protocol, VerifyTolerances,
};
use coherence::states::{flower_state, random_state, StateKind};

use crate::{print_json, Failure, RunConfig, Suite};

#[derive(Serialize)]
struct Check {
    suite: Suite,
    name: String,
    /// Quantity compared against `tolerance`; negative means the check is an inequality slack.
    residual: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct FeasibilityRow {
    c_prime: f64,
    residual: f64,
}

#[derive(Serialize)]
struct FeasibilityTable {
    theta: f64,
    rows: Vec<FeasibilityRow>,
    argmin_c_prime: f64,
    min_residual: f64,
}

#[derive(Serialize)]
struct VerifyReport {
    suite: Suite,
    seed: u64,
    checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    feasibility: Vec<FeasibilityTable>,
    passed: usize,
    failed: usize,
    pass: bool,
}

fn check(suite: Suite, name: impl Into<String>, residual: f64, tolerance: f64) -> Check {
    Check {
        suite,
        name: name.into(),
        residual,
        tolerance,
        pass: residual <= tolerance,
    }
}

fn simulate_suite(cfg: &RunConfig, out: &mut Vec<Check>) -> Result<(), Failure> {
    let tol = VerifyTolerances {
        choi: cfg.tolerance,
        ..VerifyTolerances::default()
    };
    let mut channels: Vec<(String, KrausChannel)> = Vec::new();
    for (i, d) in [2usize, 3].into_iter().enumerate() {
        let u = haar_unitary(d, &mut rng(cfg.seed, i as u64));
        channels.push((format!("haar unitary d={d}"), KrausChannel::unitary(u)?));
    }
    for (din, dout, count) in [(2, 2, 2), (2, 3, 2), (3, 2, 2)] {
        let t = KrausChannel::random(din, dout, count, cfg.seed.wrapping_add((din * 10 + dout) as u64))?;
        channels.push((format!("random {din}->{dout} with {count} Kraus"), t));
    }
    for (label, t) in &channels {
        let unitary = t.kraus().len() == 1 && t.dim_in() == t.dim_out();
        for protocol in [Protocol::Unitary, Protocol::Teleport, Protocol::Sio] {
            if protocol == Protocol::Unitary && !unitary {
                continue;
            }
            let b = build_simulation(t, protocol)?;
            let r = verify_simulation(&b, &tol)?;
            let name = format!("{protocol:?} protocol, {label}").to_lowercase();
            out.push(check(Suite::Simulate, format!("{name}: completeness"), r.completeness_residual, tol.completeness));
            out.push(check(Suite::Simulate, format!("{name}: choi distance"), r.choi_upper, tol.choi));
        }
    }
    Ok(())
}

fn measures_suite(cfg: &RunConfig, out: &mut Vec<Check>) -> Result<(), Failure> {
    let roof = RoofConfig {
        restarts: cfg.restarts.min(8),
        seed: cfg.seed,
        ..RoofConfig::default()
    };
    let flower = flower_state(2)?;
    out.push(check(
        Suite::Measures,
        "flower state relative entropy = 1",
        (relative_entropy_of_coherence(&flower) - 1.0).abs(),
        1e-10,
    ));
    let cf = coherence_of_formation(&flower, &roof)?.value;
    out.push(check(Suite::Measures, "flower state formation = 1.5", (cf - 1.5).abs(), 1e-6));
    let mut worst = f64::NEG_INFINITY;
    for i in 0..20u64 {
        let d = 2 + (i % 2) as usize;
        let rho = random_state(d, StateKind::Mixed, cfg.seed.wrapping_add(i))?;
        let gap = relative_entropy_of_coherence(&rho) - coherence_of_formation(&rho, &roof)?.value;
        worst = worst.max(gap);
    }
    out.push(check(Suite::Measures, "formation >= relative entropy on 20 random states", worst, 1e-9));
    Ok(())
}

fn power_suite(cfg: &RunConfig, out: &mut Vec<Check>) -> Result<(), Failure> {
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_critical: f64 = 0.0;
    for i in 0..=8 {
        let theta = FRAC_PI_4 * i as f64 / 8.0;
        let (v, alpha) = qubit_cgen(theta)?;
        worst_excess = worst_excess.max(binary_entropy(theta.cos().powi(2))? - v);
        worst_critical = worst_critical.max(critical_point_residual(alpha, theta).abs());
    }
    out.push(check(Suite::Power, "rotation curve dominates incoherent input", worst_excess, 1e-9));
    out.push(check(Suite::Power, "rotation curve critical point", worst_critical, 1e-6));
    let pc = PowerConfig::with_opt(OptConfig::default().with_restarts(cfg.restarts.min(16)).with_seed(cfg.seed));
    let mio = coherence_power(&flower_mio_channel(), Measure::R, true, 1, &pc)?;
    out.push(check(Suite::Power, "maximally incoherent channel has no relative-entropy power", mio.value, 1e-4));
    Ok(())
}

fn feasibility_suite(out: &mut Vec<Check>, tables: &mut Vec<FeasibilityTable>) -> Result<(), Failure> {
    let grid = feasibility_grid(0.05, 0.995, 200);
    for theta in [PI / 16.0, PI / 8.0, PI / 4.0] {
        let scan = feasibility_scan(theta, &grid)?;
        let best = scan
            .iter()
            .min_by(|a, b| a.residual.total_cmp(&b.residual))
            .expect("non-empty grid");
        let (argmin, min_residual) = (best.resource_amplitudes.0, best.residual);
        out.push(check(
            Suite::Feasibility,
            format!("theta={:.6}: balanced resource is feasible", theta),
            min_residual,
            1e-10,
        ));
        out.push(check(
            Suite::Feasibility,
            format!("theta={:.6}: minimum sits at 1/sqrt(2)", theta),
            (argmin - FRAC_1_SQRT_2).abs(),
            1e-3,
        ));
        tables.push(FeasibilityTable {
            theta,
            rows: scan
                .iter()
                .map(|r| FeasibilityRow {
                    c_prime: r.resource_amplitudes.0,
                    residual: r.residual,
                })
                .collect(),
            argmin_c_prime: argmin,
            min_residual,
        });
    }
    Ok(())
}

pub fn cmd_verify(suite: Suite, cfg: &RunConfig) -> Result<(), Failure> {
    let mut checks = Vec::new();
    let mut tables = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Simulate {
        simulate_suite(cfg, &mut checks)?;
    }
    if all || suite == Suite::Measures {
        measures_suite(cfg, &mut checks)?;
    }
    if all || suite == Suite::Power {
        power_suite(cfg, &mut checks)?;
    }
    if all || suite == Suite::Feasibility {
        feasibility_suite(&mut checks, &mut tables)?;
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    let failed = checks.len() - passed;
    let report = VerifyReport {
        suite,
        seed: cfg.seed,
        checks,
        feasibility: tables,
        passed,
        failed,
        pass: failed == 0,
    };
    print_json(&report);
    if let Some(out) = &cfg.output_path {
        coherence::io::write_json(out, &report)?;
    }
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}
