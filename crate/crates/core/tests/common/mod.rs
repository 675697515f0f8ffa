#![allow(dead_code)]

use qdiscrim_core::channel::{build_ensemble, no_measurement_threshold, trine_example, ChannelSpec};
use qdiscrim_core::ensemble::{make_pure, maximally_mixed, Ensemble, Member, PureState};
use qdiscrim_core::random::{random_density_matrix, random_ensemble, random_priors, random_pure_state, stream_rng};
use qdiscrim_core::Tolerances;
use rand::Rng;

pub fn tol() -> Tolerances {
    Tolerances::default()
}

pub fn trine(p0: f64) -> Ensemble {
    build_ensemble(&trine_example(p0).unwrap(), &tol()).unwrap()
}

/// Random qubit pair; states have random rank 1 or 2.
pub fn random_two_state_qubit(seed: u64, index: u64) -> Ensemble {
    let mut rng = stream_rng(seed, index);
    random_ensemble(&mut rng, 2, 2)
}

pub const CHANNEL_SHAPES: [(usize, usize); 4] = [(2, 2), (2, 3), (3, 3), (4, 2)];

/// Channel spec number `index` of a seeded family: shapes cycle through
/// `CHANNEL_SHAPES`; every fifth spec uses a structured signal set
/// (computational basis states, or the trine for (2, 3)), the rest
/// Haar-random signals. `p0` is filled in by the caller.
pub fn channel_family(seed: u64, index: u64, p0: f64) -> ChannelSpec {
    let (d, n) = CHANNEL_SHAPES[index as usize % CHANNEL_SHAPES.len()];
    if index.is_multiple_of(5) {
        if (d, n) == (2, 3) {
            return trine_example(p0).unwrap();
        }
        let signals = (0..n)
            .map(|k| {
                let mut v = vec![0.0; d];
                v[k % d] = 1.0;
                PureState::from_real(&v).unwrap()
            })
            .collect();
        return ChannelSpec::new(d, signals, p0).unwrap();
    }
    let mut rng = stream_rng(seed, index);
    let signals = (0..n).map(|_| random_pure_state(&mut rng, d)).collect();
    ChannelSpec::new(d, signals, p0).unwrap()
}

/// Failure probability at or above threshold for spec `index`.
pub fn satisfying_p0(seed: u64, index: u64) -> f64 {
    let (d, n) = CHANNEL_SHAPES[index as usize % CHANNEL_SHAPES.len()];
    let th = no_measurement_threshold(d, n).unwrap();
    if index.is_multiple_of(3) {
        th
    } else {
        let mut rng = stream_rng(seed ^ 0xa5a5, index);
        th + (1.0 - th) * rng.random::<f64>()
    }
}

/// Random ensemble, or (every `inject_every`-th call) one built to satisfy
/// the no-measurement condition: a full-rank candidate `ρ_0` and other
/// states `ρ_k` with `p_k ρ_k ≤ p_0 ρ_0`.
pub fn mixed_random_ensemble(seed: u64, index: u64, inject_every: u64) -> Ensemble {
    let mut rng = stream_rng(seed, index);
    let dim = rng.random_range(2..=4);
    let n = rng.random_range(2..=4);
    if !index.is_multiple_of(inject_every) {
        return random_ensemble(&mut rng, dim, n);
    }
    // ρ_k = (1−t)·1/D + t·σ_k with small t keeps p_k ρ_k under p_0 ρ_0.
    let rho0 = maximally_mixed(dim).unwrap();
    let mut priors = random_priors(&mut rng, n);
    priors.sort_by(|a, b| b.total_cmp(a));
    let mut members = vec![Member { prior: priors[0], state: rho0 }];
    for &p in &priors[1..] {
        let sigma = random_density_matrix(&mut rng, dim, 1);
        let ratio = p / priors[0];
        // eigenvalues of p ρ_k lie in [p(1−t)/D, p((1−t)/D + t)]; need ≤ p_0/D
        let t = if ratio >= 1.0 { 0.0 } else { ((1.0 / ratio - 1.0) / (dim as f64 - 1.0)).min(1.0) * rng.random::<f64>() };
        let mixed = &maximally_mixed(dim).unwrap().matrix().scale(1.0 - t) + &sigma.matrix().scale(t);
        members.push(Member {
            prior: p,
            state: qdiscrim_core::ensemble::DensityMatrix::from_matrix_unchecked(mixed),
        });
    }
    Ensemble::new(members, &tol()).unwrap()
}

pub fn pure(amplitudes: &[f64]) -> qdiscrim_core::ensemble::DensityMatrix {
    make_pure(&PureState::from_real(amplitudes).unwrap())
}

pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}
