mod common;

use coherence::channels::{channel_distance_choi, flower_mio_channel, is_mio, KrausChannel};
use coherence::numerics::{binary_entropy, ComplexMatrix};
use coherence::optimize::OptConfig;
use coherence::power::{
    cgen_bounds, coherence_power, critical_point_residual, diamond_lower, diamond_objective, evaluate_power,
    qubit_cgen, Measure, PowerConfig,
};
use coherence::random::{gaussian_vector, haar_unitary, rng};
use coherence::states::{maximally_coherent, PureState};
use common::random_io_channel;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_4, PI};

fn quick(restarts: usize) -> PowerConfig {
    PowerConfig::with_opt(OptConfig::default().with_restarts(restarts))
}

// 2·sin(Δ/2) for eigenphase spread Δ < π of U†V, else 2.
fn unitary_diamond_oracle(u: &ComplexMatrix, v: &ComplexMatrix) -> f64 {
    let w = u.adjoint() * v;
    let eig = nalgebra::linalg::Schur::new(w).eigenvalues().unwrap();
    let mut phases: Vec<f64> = eig.iter().map(|z| z.arg()).collect();
    phases.sort_by(f64::total_cmp);
    let mut gap = 2.0 * PI - (phases[phases.len() - 1] - phases[0]);
    for p in phases.windows(2) {
        gap = gap.max(p[1] - p[0]);
    }
    let spread = 2.0 * PI - gap;
    if spread >= PI {
        2.0
    } else {
        2.0 * (spread / 2.0).sin()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rotation_curve_dominates_incoherent_input(theta in 0.0f64..=FRAC_PI_4) {
        let (v, alpha) = qubit_cgen(theta).unwrap();
        prop_assert!(v >= binary_entropy(theta.cos().powi(2)).unwrap() - 1e-9);
        prop_assert!(critical_point_residual(alpha, theta).abs() <= 1e-6);
        prop_assert!((0.0..std::f64::consts::FRAC_PI_2).contains(&alpha));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn isometries_need_no_ancilla(seed in any::<u64>()) {
        let u = haar_unitary(2, &mut rng(seed, 0));
        let t = KrausChannel::unitary(u).unwrap();
        let one = coherence_power(&t, Measure::R, true, 1, &quick(16)).unwrap();
        let two = coherence_power(&t, Measure::R, true, 2, &quick(16)).unwrap();
        prop_assert!((one.value - two.value).abs() <= 2e-4, "{} vs {}", one.value, two.value);
    }

    #[test]
    fn bounds_are_ordered(seed in any::<u64>(), count in 1usize..4) {
        let t = KrausChannel::random(2, 2, count, seed).unwrap();
        let b = cgen_bounds(&t, 1, &quick(8)).unwrap();
        prop_assert!(b.lower_pure <= b.upper_mixed_r + 1e-6);
        prop_assert!(b.lower_pure >= -1e-9 && b.upper_mixed_r >= -1e-9 && b.upper_mixed_f >= -1e-9);
        prop_assert_eq!(b.sim_upper, 1.0);
        prop_assert_eq!(b.ancilla_k, 1);
    }

    #[test]
    fn optimum_is_reproducible(seed in any::<u64>(), pure in any::<bool>(), f in any::<bool>()) {
        let t = KrausChannel::random(2, 2, 2, seed).unwrap();
        let measure = if f { Measure::F } else { Measure::R };
        let cfg = quick(4);
        let r = coherence_power(&t, measure, pure, 1, &cfg).unwrap();
        let again = evaluate_power(&t, measure, 1, &r.argmax_state, &cfg).unwrap();
        prop_assert!((r.value - again).abs() <= 1e-8);
        let rerun = coherence_power(&t, measure, pure, 1, &cfg).unwrap();
        prop_assert_eq!(r.value, rerun.value);
    }

    #[test]
    fn mio_channels_do_not_raise_relative_entropy(seed in any::<u64>(), din in 1usize..4, dout in 1usize..4) {
        let t = random_io_channel(din, dout, 2, seed);
        prop_assert!(is_mio(&t, 1e-9));
        let r = coherence_power(&t, Measure::R, true, 1, &quick(8)).unwrap();
        prop_assert!(r.value <= 1e-4);
    }
}

#[test]
fn flower_channel_keeps_relative_entropy_but_not_formation() {
    let t = flower_mio_channel();
    let r = coherence_power(&t, Measure::R, true, 1, &quick(16)).unwrap();
    assert!(r.value <= 1e-4, "{}", r.value);
    let plus = maximally_coherent(2).unwrap();
    let cfg = PowerConfig::default();
    let gain = evaluate_power(&t, Measure::F, 1, &coherence::power::ArgmaxState::Pure(plus), &cfg).unwrap();
    // flower(2) has formation 1.5; |+> has 1.
    assert!((gain - 0.5).abs() < 1e-3, "{gain}");
}

#[test]
fn diamond_lower_bound_for_unitaries() {
    for seed in 0..5u64 {
        let u = haar_unitary(2, &mut rng(seed, 1));
        let v = haar_unitary(2, &mut rng(seed, 2));
        let a = KrausChannel::unitary(u.clone()).unwrap();
        let b = KrausChannel::unitary(v.clone()).unwrap();
        let oracle = unitary_diamond_oracle(&u, &v);
        let mut floor: f64 = 0.0;
        let mut r = rng(seed, 3);
        for _ in 0..10_000 {
            let phi = PureState::normalized(gaussian_vector(4, &mut r)).unwrap();
            floor = floor.max(diamond_objective(&a, &b, &phi).unwrap());
        }
        let value = diamond_lower(&a, &b, &OptConfig::default().with_restarts(8)).unwrap();
        let (lo, hi) = channel_distance_choi(&a, &b).unwrap();
        assert!(value >= floor - 1e-9, "seed {seed}: {value} < floor {floor}");
        assert!(value <= oracle + 1e-6, "seed {seed}: {value} > {oracle}");
        assert!((value - oracle).abs() <= 1e-5, "seed {seed}: {value} vs {oracle}");
        assert!(value >= lo - 1e-6 && value <= hi + 1e-6);
    }
}

#[test]
fn identity_and_dephasing_are_distinguishable() {
    let id = KrausChannel::identity(2);
    let deph = KrausChannel::dephasing(2);
    let v = diamond_lower(&id, &deph, &OptConfig::default().with_restarts(8)).unwrap();
    let (lo, hi) = channel_distance_choi(&id, &deph).unwrap();
    assert!(v >= 1.0 - 1e-9);
    assert!(v >= lo - 1e-6 && v <= hi + 1e-6);
}
