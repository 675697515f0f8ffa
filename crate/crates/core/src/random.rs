//! Seeded generators for random states, unitaries and POMs.
//!
//! Every stream is a ChaCha8 generator keyed by `(seed, stream)`, so
//! independent workers and restarts draw from disjoint sequences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ensemble::{DensityMatrix, Ensemble, Member, PureState};
use crate::linalg::{eig_hermitian, ComplexMatrix, C64};

/// Generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..dim).map(|_| gaussian_c64(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> PureState {
    PureState::new(random_unit_vector(rng, dim)).expect("normalized by construction")
}

/// Haar-random unitary via Gram-Schmidt on a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<C64> = (0..dim).map(|_| gaussian_c64(rng)).collect();
        for _ in 0..2 {
            for u in &cols {
                let overlap: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= overlap * y;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    let mut u = ComplexMatrix::zeros(dim);
    for (c, col) in cols.iter().enumerate() {
        for (r, z) in col.iter().enumerate() {
            u[(r, c)] = *z;
        }
    }
    u
}

/// Random PSD matrix `G G†` with `G` a `dim × rank` Ginibre matrix.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim);
    for _ in 0..rank {
        let g: Vec<C64> = (0..dim).map(|_| gaussian_c64(rng)).collect();
        m = &m + &ComplexMatrix::outer(&g);
    }
    m.hermitian_part()
}

/// Random density matrix of the given rank (clamped to `1..=dim`).
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> DensityMatrix {
    let rank = rank.clamp(1, dim);
    let m = random_psd(rng, dim, rank);
    let tr = m.trace().re;
    DensityMatrix::from_matrix_unchecked(m.scale(1.0 / tr).hermitian_part())
}

/// Random probability vector of length `n` (normalized exponentials).
pub fn random_priors<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Random POM with `n` full-rank elements: `S^{-1/2} A_k S^{-1/2}` with `S = Σ A_k`.
pub fn random_pom_elements<R: Rng + ?Sized>(rng: &mut R, dim: usize, n: usize) -> Vec<ComplexMatrix> {
    let raw: Vec<ComplexMatrix> = (0..n).map(|_| random_psd(rng, dim, dim)).collect();
    let mut total = ComplexMatrix::zeros(dim);
    for a in &raw {
        total = &total + a;
    }
    let inv_sqrt = eig_hermitian(&total)
        .expect("sum of PSD matrices is Hermitian")
        .spectral_map(|l| (l > 0.0).then(|| 1.0 / l.sqrt()));
    raw.iter()
        .map(|a| (&(&inv_sqrt * a) * &inv_sqrt).hermitian_part())
        .collect()
}

/// Random ensemble of `n` states with ranks drawn uniformly from `1..=dim`.
pub fn random_ensemble<R: Rng + ?Sized>(rng: &mut R, dim: usize, n: usize) -> Ensemble {
    let priors = random_priors(rng, n);
    let members = priors
        .into_iter()
        .map(|prior| {
            let rank = rng.random_range(1..=dim);
            Member {
                prior,
                state: random_density_matrix(rng, dim, rank),
            }
        })
        .collect();
    Ensemble::from_members_unchecked(members)
}
