//! Checks against values computed independently of the crate: closed forms
//! evaluated here by hand, plus frozen regression values from certified runs.

mod common;

use approx::assert_abs_diff_eq;
use common::{binary_entropy, pure, tol, trine};
use qdiscrim_core::channel::trine_example;
use qdiscrim_core::ensemble::{Ensemble, Member};
use qdiscrim_core::linalg::{ComplexMatrix, C64};
use qdiscrim_core::measurement::{error_probability, mutual_information};
use qdiscrim_core::optimality::{
    check_min_error, check_mixed_decomposition_condition, check_no_measurement, check_pure_state_condition,
};
use qdiscrim_core::random::{random_ensemble, stream_rng};
use qdiscrim_core::solvers::{brute_force_projective, helstrom_two_state, optimize_min_error, SolverConfig};

fn pair(p0: f64, a: &[f64], b: &[f64]) -> Ensemble {
    Ensemble::from_pairs(vec![(p0, pure(a)), (1.0 - p0, pure(b))], &tol()).unwrap()
}

/// Trace norm of a 2×2 Hermitian matrix from its characteristic polynomial.
fn qubit_trace_norm(m: &ComplexMatrix) -> f64 {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)].norm();
    let centre = (a + d) / 2.0;
    let radius = ((a - d) * (a - d) / 4.0 + b * b).sqrt();
    (centre + radius).abs() + (centre - radius).abs()
}

#[test]
fn helstrom_equal_priors_at_forty_five_degrees() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let e = pair(0.5, &[1.0, 0.0], &[s, s]);
    // (1 − √(1 − 4 p0 p1 |⟨ψ0|ψ1⟩|²)) / 2 with overlap² = 1/2
    let expected = (1.0 - (0.5f64).sqrt()) / 2.0;
    assert_abs_diff_eq!(expected, 0.146_446_609_406_726_24, epsilon = 1e-15);
    let closed = helstrom_two_state(&e, &tol()).unwrap();
    assert_abs_diff_eq!(closed.error_probability, expected, epsilon = 1e-12);
    let grid = brute_force_projective(&e, 256, &tol()).unwrap();
    assert_abs_diff_eq!(grid.error_probability, expected, epsilon = 1e-4);
    let iterative = optimize_min_error(&e, &SolverConfig::default(), &tol()).unwrap();
    assert_abs_diff_eq!(iterative.error_probability, expected, epsilon = 1e-9);
}

#[test]
fn helstrom_matches_trace_norm_on_random_qubit_pairs() {
    for i in 0..40 {
        let e = common::random_two_state_qubit(99, i);
        let delta = &e.weighted_state(0) - &e.weighted_state(1);
        let expected = (1.0 - qubit_trace_norm(&delta)) / 2.0;
        let r = helstrom_two_state(&e, &tol()).unwrap();
        assert_abs_diff_eq!(r.error_probability, expected, epsilon = 1e-12);
        assert!(r.optimality.hermiticity_residual <= tol().herm_tol, "pair {i}");
        assert!(r.optimality.satisfied_sufficient, "pair {i}");
    }
}

#[test]
fn helstrom_information_is_binary_symmetric_channel_capacity() {
    for angle in [0.1, 0.4, 0.7, 1.2] {
        let e = pair(0.5, &[1.0, 0.0], &[f64::cos(angle), f64::sin(angle)]);
        let r = helstrom_two_state(&e, &tol()).unwrap();
        let info = mutual_information(&r.to_pom(), &e).unwrap();
        assert_abs_diff_eq!(info, 1.0 - binary_entropy(r.error_probability), epsilon = 1e-10);
    }
}

#[test]
fn trine_optimum_below_threshold() {
    // the trine POM (2/3)|ψ_k⟩⟨ψ_k| succeeds with 2(1 − p0)/3, which beats
    // guessing the failure exactly when p0 < 2/5
    for (p0, frozen) in [(0.2, 4.666_666_666_666_664_5e-1), (0.3, 5.333_333_333_333_369e-1)] {
        let e = trine(p0);
        let r = optimize_min_error(&e, &SolverConfig::default(), &tol()).unwrap();
        assert_abs_diff_eq!(r.error_probability, (1.0 + 2.0 * p0) / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.error_probability, frozen, epsilon = 1e-9);
        assert!(r.error_probability < 1.0 - e.max_prior() - 1e-3);
        assert!(r.optimality.satisfied_sufficient);
    }
}

#[test]
fn trine_projective_grid_is_suboptimal() {
    let e = trine(0.2);
    let grid = brute_force_projective(&e, 64, &tol()).unwrap().error_probability;
    assert!(grid > 7.0 / 15.0 + 0.01, "projective {grid}");
}

#[test]
fn seeded_three_state_regression() {
    const FROZEN: [f64; 6] = [
        2.883_896_267_326_469e-2,
        4.053_184_628_896_996e-1,
        2.405_891_470_082_666e-1,
        2.967_385_261_443_631e-1,
        3.363_474_176_261_778e-1,
        2.679_504_538_281_954e-1,
    ];
    let cfg = SolverConfig { seed: 5, ..Default::default() };
    for (i, frozen) in FROZEN.iter().enumerate() {
        let mut rng = stream_rng(31337, i as u64);
        let e = random_ensemble(&mut rng, 2 + i % 2, 3);
        let r = optimize_min_error(&e, &cfg, &tol()).unwrap();
        assert_abs_diff_eq!(r.error_probability, *frozen, epsilon = 1e-9);
        assert!(r.optimality.satisfied_sufficient, "set {i}");
        assert!(r.error_probability <= 1.0 - e.max_prior() + 1e-12);
    }
}

fn trine_with_mixed_signal(p0: f64) -> Ensemble {
    let spec = trine_example(p0).unwrap();
    let states = spec.signal_states();
    let p = (1.0 - p0) / 3.0;
    let outer = |k: usize| ComplexMatrix::outer(states[k].amplitudes());
    let mixture = (&outer(1) + &outer(2)).scale(0.5);
    let members = vec![
        Member { prior: p0, state: qdiscrim_core::ensemble::maximally_mixed(2).unwrap() },
        Member { prior: p, state: qdiscrim_core::ensemble::make_pure(&states[0]) },
        Member { prior: p, state: qdiscrim_core::ensemble::make_pure(&states[1]) },
        Member { prior: p, state: qdiscrim_core::ensemble::DensityMatrix::new(mixture, &tol()).unwrap() },
    ];
    Ensemble::new(members, &tol()).unwrap()
}

#[test]
fn mixed_decomposition_agrees_with_full_check() {
    // p0 = 1/2: p0/2 = 1/4 dominates p·w ≤ 1/6 for every component
    let e = trine_with_mixed_signal(0.5);
    let records = check_mixed_decomposition_condition(&e, 0, &tol()).unwrap();
    assert_eq!(records.len(), 4);
    assert!(records.iter().all(|r| r.ok));
    assert!(check_no_measurement(&e, &tol()).unwrap().satisfied);

    // mixture weights are (1 ± cos 60°)/2 = 3/4, 1/4
    let weights: Vec<f64> = records.iter().filter(|r| r.k == 3).map(|r| r.weight).collect();
    assert_abs_diff_eq!(weights[0], 0.75, epsilon = 1e-12);
    assert_abs_diff_eq!(weights[1], 0.25, epsilon = 1e-12);

    let e = trine_with_mixed_signal(0.2);
    assert!(check_mixed_decomposition_condition(&e, 0, &tol()).unwrap().iter().any(|r| !r.ok));
    assert!(!check_no_measurement(&e, &tol()).unwrap().satisfied);
}

#[test]
fn pure_signal_test_is_only_necessary_for_a_non_uniform_candidate() {
    // ρ0 = diag(0.9, 0.1) with p0 = 3/4 against |+⟩ with p1 = 1/4:
    // p0 ⟨+|ρ0|+⟩ = 3/8 ≥ 1/4, yet p0 ρ0 − p1 |+⟩⟨+| has a negative eigenvalue
    let rho0 = qdiscrim_core::ensemble::DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.9, 0.1]), &tol()).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let e = Ensemble::from_pairs(vec![(0.75, rho0), (0.25, pure(&[s, s]))], &tol()).unwrap();
    let records = check_pure_state_condition(&e, 0, &tol()).unwrap();
    assert_abs_diff_eq!(records[0].lhs, 0.375, epsilon = 1e-15);
    assert!(records[0].ok);
    let full = check_no_measurement(&e, &tol()).unwrap();
    assert!(!full.satisfied);
    // det [[0.675 − 0.125, −0.125], [−0.125, 0.075 − 0.125]] < 0
    let m = [[0.55, -0.125], [-0.125, -0.05]];
    let centre = (m[0][0] + m[1][1]) / 2.0;
    let radius = (((m[0][0] - m[1][1]) / 2.0f64).powi(2) + m[0][1] * m[0][1]).sqrt();
    assert_abs_diff_eq!(full.margin, centre - radius, epsilon = 1e-12);
}

#[test]
fn guessing_is_stationary_but_not_always_optimal() {
    let e = trine(0.3);
    let guess = qdiscrim_core::measurement::guess_pom(0, 4, 2).unwrap();
    let r = check_min_error(&guess, &e, &tol()).unwrap();
    assert_eq!(r.max_eq4_residual(), 0.0);
    assert!(!r.satisfied_sufficient);
    assert_abs_diff_eq!(error_probability(&guess, &e).unwrap(), 0.7, epsilon = 1e-15);
}

#[test]
fn complex_phases_do_not_change_the_helstrom_bound() {
    // |ψ1⟩ = (1, i)/√2 has |⟨0|ψ1⟩|² = 1/2 like the real 45° state
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let psi = qdiscrim_core::ensemble::PureState::new(vec![C64::new(s, 0.0), C64::new(0.0, s)]).unwrap();
    let e = Ensemble::from_pairs(
        vec![(0.5, pure(&[1.0, 0.0])), (0.5, qdiscrim_core::ensemble::make_pure(&psi))],
        &tol(),
    )
    .unwrap();
    let r = helstrom_two_state(&e, &tol()).unwrap();
    assert_abs_diff_eq!(r.error_probability, (1.0 - (0.5f64).sqrt()) / 2.0, epsilon = 1e-12);
}
