mod common;

use common::{channel_family, mixed_random_ensemble, tol};
use proptest::prelude::*;
use qdiscrim_core::channel::{build_ensemble, check_simple_condition, no_measurement_threshold, simulate};
use qdiscrim_core::ensemble::{
    ensemble_from_json, ensemble_to_json, make_pure, maximally_mixed, validate_ensemble, Ensemble,
};
use qdiscrim_core::linalg::{eig_hermitian, is_psd};
use qdiscrim_core::measurement::{error_probability, guess_pom, mutual_information, outcome_table, Pom};
use qdiscrim_core::optimality::{check_min_error, check_no_measurement, check_pure_state_condition};
use qdiscrim_core::random::{
    random_ensemble, random_pom_elements, random_psd, random_pure_state, random_unitary, stream_rng,
};
use qdiscrim_core::solvers::{optimize_min_error, SolverConfig};
use rand::seq::SliceRandom;

fn ensemble(seed: u64, dim: usize, n: usize) -> Ensemble {
    random_ensemble(&mut stream_rng(seed, 0), dim, n)
}

fn pom(seed: u64, dim: usize, n: usize) -> Pom {
    Pom::new(random_pom_elements(&mut stream_rng(seed, 1), dim, n), &tol()).unwrap()
}

fn permutation(seed: u64, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream_rng(seed, 2));
    perm
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectrum_is_unitarily_invariant(seed: u64, dim in 1usize..=5, rank in 1usize..=5) {
        let mut rng = stream_rng(seed, 0);
        let a = random_psd(&mut rng, dim, rank.min(dim));
        let u = random_unitary(&mut rng, dim);
        let b = &(&u * &a) * &u.adjoint();
        let ea = eig_hermitian(&a).unwrap();
        let eb = eig_hermitian(&b).unwrap();
        for (x, y) in ea.values.iter().zip(&eb.values) {
            prop_assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
        }
        let sum: f64 = ea.values.iter().sum();
        prop_assert!((sum - a.trace().re).abs() <= 1e-12);
        prop_assert!((&ea.reconstruct() - &a).max_norm() <= 1e-12);
    }

    #[test]
    fn sum_of_psd_is_psd(seed: u64, dim in 1usize..=5) {
        let mut rng = stream_rng(seed, 0);
        let a = random_psd(&mut rng, dim, 1);
        let b = random_psd(&mut rng, dim, dim);
        prop_assert!(is_psd(&a, 1e-12).unwrap());
        prop_assert!(is_psd(&(&a + &b), 1e-12).unwrap());
    }

    #[test]
    fn special_states_have_known_spectra(seed: u64, dim in 1usize..=6) {
        let psi = random_pure_state(&mut stream_rng(seed, 0), dim);
        let values = eig_hermitian(make_pure(&psi).matrix()).unwrap().values;
        prop_assert!((values[dim - 1] - 1.0).abs() <= 1e-12);
        prop_assert!(values[..dim - 1].iter().all(|v| v.abs() <= 1e-12));
        let mixed = eig_hermitian(maximally_mixed(dim).unwrap().matrix()).unwrap().values;
        prop_assert!(mixed.iter().all(|v| (v - 1.0 / dim as f64).abs() <= 1e-15));
    }

    #[test]
    fn saved_ensembles_reload_valid_and_identical(seed: u64, dim in 1usize..=4, n in 1usize..=4) {
        let e = ensemble(seed, dim, n);
        let back = ensemble_from_json(&ensemble_to_json(&e), &tol()).unwrap();
        prop_assert!(validate_ensemble(&back, &tol()).valid);
        prop_assert_eq!(back, e);
    }

    #[test]
    fn outcome_probabilities_sum_to_one(seed: u64, dim in 1usize..=4, n in 1usize..=4) {
        let e = ensemble(seed, dim, n);
        let table = outcome_table(&pom(seed, dim, n), &e).unwrap();
        for j in 0..n {
            let s: f64 = (0..n).map(|k| table.p_cond[k][j]).sum();
            prop_assert!((s - 1.0).abs() <= 1e-9);
        }
        let marginal: f64 = table.p_marginal.iter().sum();
        prop_assert!((marginal - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn guessing_errs_with_the_other_priors(seed: u64, dim in 1usize..=4, n in 1usize..=5, j in 0usize..5) {
        let e = ensemble(seed, dim, n);
        let j = j % n;
        let g = guess_pom(j, n, dim).unwrap();
        prop_assert!((error_probability(&g, &e).unwrap() - (1.0 - e.prior(j))).abs() <= 1e-12);
        prop_assert_eq!(mutual_information(&g, &e).unwrap(), 0.0);
    }

    #[test]
    fn information_is_nonnegative_and_vanishes_for_identical_states(seed: u64, dim in 1usize..=4, n in 1usize..=4) {
        let e = ensemble(seed, dim, n);
        let p = pom(seed, dim, n);
        prop_assert!(mutual_information(&p, &e).unwrap() >= 0.0);
        // all hypotheses share one state: outcome statistics carry no information
        let shared = e.state(0).clone();
        let same = Ensemble::from_pairs(e.priors().into_iter().map(|q| (q, shared.clone())).collect(), &tol()).unwrap();
        prop_assert_eq!(mutual_information(&p, &same).unwrap(), 0.0);
    }

    #[test]
    fn relabelling_preserves_error_and_information(seed: u64, dim in 1usize..=4, n in 1usize..=4) {
        let e = ensemble(seed, dim, n);
        let p = pom(seed, dim, n);
        let perm = permutation(seed, n);
        let (e2, p2) = (e.permuted(&perm), p.permuted(&perm));
        let pe = error_probability(&p, &e).unwrap();
        prop_assert!((pe - error_probability(&p2, &e2).unwrap()).abs() <= 1e-12);
        let mi = mutual_information(&p, &e).unwrap();
        prop_assert!((mi - mutual_information(&p2, &e2).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn no_measurement_verdict_is_unitarily_invariant(seed: u64, index in 0u64..1000) {
        let e = mixed_random_ensemble(seed, index, 3);
        let u = random_unitary(&mut stream_rng(seed, 3), e.dim());
        let a = check_no_measurement(&e, &tol()).unwrap();
        let b = check_no_measurement(&e.conjugate_by(&u), &tol()).unwrap();
        // verdicts may only differ for margins inside the tolerance band
        if (a.margin + tol().psd_tol).abs() > 1e-12 {
            prop_assert_eq!(a.satisfied, b.satisfied);
        }
        prop_assert!((a.margin - b.margin).abs() <= 1e-12);
    }

    #[test]
    fn satisfied_implies_prior_and_span_conditions(seed: u64, index in 0u64..1000) {
        let e = mixed_random_ensemble(seed, index, 2);
        let r = check_no_measurement(&e, &tol()).unwrap();
        if r.satisfied {
            prop_assert!(r.prior_condition && r.span_condition);
        }
    }

    #[test]
    fn channel_simplifications_match_full_check(seed: u64, index in 0u64..1000, p0 in 0.0f64..=1.0) {
        let e = build_ensemble(&channel_family(seed, index, p0), &tol()).unwrap();
        let full = check_no_measurement(&e, &tol()).unwrap().satisfied;
        prop_assert_eq!(check_simple_condition(&e, 0, &tol()).unwrap().satisfied, full);
        let pure = check_pure_state_condition(&e, 0, &tol()).unwrap().iter().all(|r| r.ok);
        prop_assert_eq!(pure, full);
    }

    #[test]
    fn threshold_falls_with_signals_and_rises_with_dimension(d in 1usize..50, n in 1usize..50) {
        let t = no_measurement_threshold(d, n).unwrap();
        prop_assert!(t > 0.0 && t < 1.0);
        prop_assert!(no_measurement_threshold(d, n + 1).unwrap() < t);
        prop_assert!(no_measurement_threshold(d + 1, n).unwrap() > t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn optimizer_never_loses_to_guessing(seed: u64, dim in 1usize..=3, n in 1usize..=4) {
        let e = ensemble(seed, dim, n);
        let cfg = SolverConfig { restarts: 3, seed, ..Default::default() };
        let r = optimize_min_error(&e, &cfg, &tol()).unwrap();
        prop_assert!(r.error_probability <= 1.0 - e.max_prior() + 1e-9);
        let check = check_min_error(&r.to_pom(), &e, &Default::default()).unwrap();
        prop_assert!(check.max_eq4_residual() <= 10.0 * tol().herm_tol, "residual {}", check.max_eq4_residual());
    }

    #[test]
    fn simulation_is_reproducible_and_unbiased(seed: u64, p0 in 0.05f64..0.95) {
        let e = build_ensemble(&channel_family(seed, seed % 17, p0), &tol()).unwrap();
        let p = pom(seed, e.dim(), e.len());
        let trials = 100_000;
        let a = simulate(&e, &p, trials, seed).unwrap();
        prop_assert_eq!(&a, &simulate(&e, &p, trials, seed).unwrap());
        let q = a.expected_error;
        let sigma = (q * (1.0 - q) / trials as f64).sqrt();
        prop_assert!((a.empirical_error - q).abs() <= 4.0 * sigma + 1e-12, "{} vs {q}", a.empirical_error);
    }
}

#[test]
fn guessing_rate_ignores_signal_geometry() {
    // three random qubit signals with p0 = 0.4: the guess strategy errs
    // with probability 0.6 whatever the signals are
    for i in 0..5 {
        let spec = channel_family(404, 4 * i + 1, 0.4);
        let e = build_ensemble(&spec, &tol()).unwrap();
        let r = simulate(&e, &guess_pom(0, e.len(), e.dim()).unwrap(), 200_000, i).unwrap();
        let sigma = (0.24f64 / 200_000.0).sqrt();
        assert!((r.empirical_error - 0.6).abs() <= 4.0 * sigma, "{}", r.empirical_error);
        assert!((r.expected_error - 0.6).abs() <= 1e-15);
    }
}

#[test]
fn single_thread_and_pooled_simulations_agree() {
    let e = common::trine(0.3);
    let p = guess_pom(1, 4, 2).unwrap();
    let pooled = simulate(&e, &p, 300_000, 11).unwrap();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| simulate(&e, &p, 300_000, 11).unwrap());
    assert_eq!(pooled, single);
}
