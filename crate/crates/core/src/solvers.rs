//! Independent oracles for minimum-error POMs.
//!
//! * [`helstrom_two_state`]: closed form for two hypotheses.
//! * [`optimize_min_error`]: fixed-point iteration
//!   `Π_k ← Λ^{-1/2} R_k Π_k R_k Λ^{-1/2}` with `R_k = p_k ρ_k` and
//!   `Λ = Σ_j R_j Π_j R_j`, run from several starting POMs.
//! * [`brute_force_projective`]: exhaustive scan of qubit projective
//!   measurements on an angular grid.
//!
//! [`cross_check`] compares the iteration against the other two.
//!
//! Every oracle reports its error through
//! [`error_probability`](crate::measurement::error_probability) on the POM
//! it built, never through a closed-form expression.

use serde::{Deserialize, Serialize};

use crate::ensemble::{validate_ensemble, Ensemble};
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian_with_tol, ComplexMatrix, Tolerances, C64};
use crate::measurement::{error_probability, guess_pom, Pom};
use crate::optimality::{check_min_error, OptimalityReport};
use crate::par::map_indexed;
use crate::random::{random_pom_elements, stream_rng};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Max-norm change of the POM elements per sweep that counts as converged.
    pub convergence_tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            convergence_tol: 1e-10,
            restarts: 8,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.max_iterations < 1 {
            bad.push("max_iterations must be at least 1".to_string());
        }
        if !(self.convergence_tol > 0.0) {
            bad.push("convergence_tol must be positive".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub pom: PomElements,
    pub error_probability: f64,
    pub iterations: usize,
    pub converged: bool,
    pub optimality: OptimalityReport,
}

/// Serializable view of a POM's elements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PomElements(pub Vec<ComplexMatrix>);

impl SolverResult {
    pub fn to_pom(&self) -> Pom {
        Pom::from_elements_unchecked(self.pom.0.clone())
    }

    fn finish(pom: Pom, e: &Ensemble, iterations: usize, converged: bool, tol: &Tolerances) -> Result<Self> {
        let error_probability = error_probability(&pom, e)?;
        let optimality = check_min_error(&pom, e, tol)?;
        Ok(Self {
            pom: PomElements(pom.elements().to_vec()),
            error_probability,
            iterations,
            converged,
            optimality,
        })
    }
}

fn require_valid(e: &Ensemble, tol: &Tolerances) -> Result<()> {
    let report = validate_ensemble(e, tol);
    if report.valid {
        Ok(())
    } else {
        Err(Error::Validation(report.diagnostics()))
    }
}

/// Closed-form optimal measurement for two hypotheses.
///
/// `Π_0` projects onto the positive eigenspace of `p_0 ρ_0 − p_1 ρ_1`,
/// `Π_1` onto the negative one; the null space goes to the likelier
/// hypothesis (hypothesis 0 on a tie).
pub fn helstrom_two_state(e: &Ensemble, tol: &Tolerances) -> Result<SolverResult> {
    if e.len() != 2 {
        return Err(Error::CountMismatch {
            what: "two-state solver members",
            expected: 2,
            found: e.len(),
        });
    }
    require_valid(e, tol)?;
    let delta = &e.weighted_state(0) - &e.weighted_state(1);
    let eig = eig_hermitian_with_tol(&delta, tol.herm_tol)?;
    let null_to_zero = e.prior(0) >= e.prior(1);
    let z = tol.zero_tol;
    let pi0 = eig.projector(|l| l > z || (l.abs() <= z && null_to_zero));
    let pi1 = eig.projector(|l| l < -z || (l.abs() <= z && !null_to_zero));
    let pom = Pom::from_elements_unchecked(vec![pi0, pi1]);
    SolverResult::finish(pom, e, 0, true, tol)
}

struct IterationOutcome {
    elements: Vec<ComplexMatrix>,
    iterations: usize,
    converged: bool,
}

fn fixed_point(weighted: &[ComplexMatrix], start: Vec<ComplexMatrix>, cfg: &SolverConfig, tol: &Tolerances) -> IterationOutcome {
    let n = weighted.len();
    let dim = weighted[0].dim();
    let mut elements = start;
    for it in 1..=cfg.max_iterations {
        let sandwiches: Vec<ComplexMatrix> = weighted
            .iter()
            .zip(&elements)
            .map(|(r, pi)| (&(r * pi) * r).hermitian_part())
            .collect();
        let mut lambda = ComplexMatrix::zeros(dim);
        for s in &sandwiches {
            lambda = &lambda + s;
        }
        let eig = eig_hermitian_with_tol(&lambda.hermitian_part(), f64::INFINITY)
            .expect("Hermitian by construction");
        let cutoff = tol.zero_tol * eig.max_value().max(0.0);
        let inv_sqrt = eig.spectral_map(|l| (l > cutoff).then(|| 1.0 / l.sqrt()));
        let kernel_share = eig.projector(|l| l <= cutoff).scale(1.0 / n as f64);

        let next: Vec<ComplexMatrix> = sandwiches
            .iter()
            .map(|s| &(&(&inv_sqrt * s) * &inv_sqrt).hermitian_part() + &kernel_share)
            .collect();
        let next = restore_completeness(next);
        let change = next
            .iter()
            .zip(&elements)
            .map(|(new, old)| (new - old).max_norm())
            .fold(0.0f64, f64::max);
        elements = next;
        if change <= cfg.convergence_tol {
            return IterationOutcome {
                elements,
                iterations: it,
                converged: true,
            };
        }
    }
    IterationOutcome {
        elements,
        iterations: cfg.max_iterations,
        converged: false,
    }
}

/// `Π_k ← S^{-1/2} Π_k S^{-1/2}` with `S = Σ Π_k`.
///
/// A badly conditioned `Λ` (tiny priors, nearly parallel states) leaves the
/// sweep's output off completeness by far more than its error in `P_e`;
/// `S` itself is close to the identity, so this correction is accurate.
fn restore_completeness(elements: Vec<ComplexMatrix>) -> Vec<ComplexMatrix> {
    let dim = elements[0].dim();
    let mut sum = ComplexMatrix::zeros(dim);
    for el in &elements {
        sum = &sum + el;
    }
    let eig = eig_hermitian_with_tol(&sum.hermitian_part(), f64::INFINITY).expect("Hermitian by construction");
    if eig.min_value() <= 0.0 {
        return elements;
    }
    let inv_sqrt = eig.spectral_map(|l| Some(1.0 / l.sqrt()));
    elements
        .iter()
        .map(|el| (&(&inv_sqrt * el) * &inv_sqrt).hermitian_part())
        .collect()
}

fn start_elements(restart: usize, dim: usize, n: usize, seed: u64) -> Vec<ComplexMatrix> {
    if restart == 0 {
        vec![ComplexMatrix::identity(dim).scale(1.0 / n as f64); n]
    } else {
        let mut rng = stream_rng(seed, restart as u64);
        random_pom_elements(&mut rng, dim, n)
    }
}

/// Numerical minimum-error POM.
///
/// Restart 0 starts from the uniform POM `1/n`, restarts `1..restarts`
/// from seeded random POMs. The `n` guessing POMs are fixed points of the
/// iteration and are evaluated directly as additional candidates, so the
/// result is never worse than guessing. The lowest error wins; ties go to
/// the earliest candidate.
pub fn optimize_min_error(e: &Ensemble, cfg: &SolverConfig, tol: &Tolerances) -> Result<SolverResult> {
    cfg.validate()?;
    require_valid(e, tol)?;
    let n = e.len();
    let dim = e.dim();
    let weighted: Vec<ComplexMatrix> = (0..n).map(|k| e.weighted_state(k)).collect();
    let restarts = cfg.restarts.max(1);

    let iterated: Vec<IterationOutcome> = map_indexed(restarts, |r| {
        fixed_point(&weighted, start_elements(r, dim, n, cfg.seed), cfg, tol)
    });

    let loose = Tolerances {
        herm_tol: 10.0 * tol.herm_tol,
        psd_tol: 10.0 * tol.psd_tol,
        ..*tol
    };
    let mut best: Option<(f64, Pom, usize, bool)> = None;
    let mut rejected = Vec::new();
    let candidates = iterated
        .into_iter()
        .map(|o| (Pom::from_elements_unchecked(o.elements), o.iterations, o.converged))
        .chain((0..n).map(|j| (guess_pom(j, n, dim).expect("j < n"), 0, true)));
    for (idx, (pom, iterations, converged)) in candidates.enumerate() {
        let problems = pom.violations(&loose);
        if !problems.is_empty() {
            rejected.push(format!("candidate {idx}: {}", problems.join(", ")));
            continue;
        }
        let pe = error_probability(&pom, e)?;
        if best.as_ref().is_none_or(|b| pe < b.0) {
            best = Some((pe, pom, iterations, converged));
        }
    }
    let (_, pom, iterations, converged) =
        best.ok_or_else(|| Error::Solver(format!("no valid POM produced: {}", rejected.join("; "))))?;
    SolverResult::finish(pom, e, iterations, converged, tol)
}

fn basis_pair(theta: f64, phi: f64) -> [Vec<C64>; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    let phase = C64::from_polar(1.0, phi);
    [
        vec![C64::new(c, 0.0), phase * s],
        vec![-phase.conj() * s, C64::new(c, 0.0)],
    ]
}

/// Best qubit POM among grid projective measurements and guessing.
///
/// Each basis `{|b_0⟩, |b_1⟩}` on a `grid_steps × grid_steps` polar/azimuthal
/// grid sends outcome `a` to the hypothesis maximizing `p_j ⟨b_a|ρ_j|b_a⟩`,
/// which covers every labeling and hypothesis assignment.
pub fn brute_force_projective(e: &Ensemble, grid_steps: usize, tol: &Tolerances) -> Result<SolverResult> {
    if e.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: e.dim(),
        });
    }
    if grid_steps < 8 {
        return Err(Error::Validation(vec![format!(
            "grid_steps must be at least 8 (got {grid_steps})"
        )]));
    }
    require_valid(e, tol)?;
    let n = e.len();
    let weighted: Vec<ComplexMatrix> = (0..n).map(|k| e.weighted_state(k)).collect();

    let best_assignment = |b: &[C64]| -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (j, r) in weighted.iter().enumerate() {
            let v = r.expectation(b).re;
            if v > best.1 {
                best = (j, v);
            }
        }
        best
    };

    // Per polar row: (success, theta, phi, h0, h1), first maximum kept.
    let rows = map_indexed(grid_steps, |i| {
        let theta = std::f64::consts::PI * i as f64 / (grid_steps - 1) as f64;
        let mut best: Option<(f64, f64, f64, usize, usize)> = None;
        for l in 0..grid_steps {
            let phi = 2.0 * std::f64::consts::PI * l as f64 / grid_steps as f64;
            let [b0, b1] = basis_pair(theta, phi);
            let (h0, v0) = best_assignment(&b0);
            let (h1, v1) = best_assignment(&b1);
            let success = v0 + v1;
            if best.is_none_or(|b| success > b.0) {
                best = Some((success, theta, phi, h0, h1));
            }
        }
        best.expect("grid is nonempty")
    });

    let mut best_pom = guess_pom(e.argmax_prior(), n, 2)?;
    let mut best_pe = error_probability(&best_pom, e)?;
    for j in 0..n {
        let pom = guess_pom(j, n, 2)?;
        let pe = error_probability(&pom, e)?;
        if pe < best_pe {
            best_pe = pe;
            best_pom = pom;
        }
    }
    let (_, theta, phi, h0, h1) = rows
        .into_iter()
        .fold(None, |acc: Option<(f64, f64, f64, usize, usize)>, r| match acc {
            Some(a) if a.0 >= r.0 => Some(a),
            _ => Some(r),
        })
        .expect("grid is nonempty");
    let [b0, b1] = basis_pair(theta, phi);
    let mut elements = vec![ComplexMatrix::zeros(2); n];
    elements[h0] = &elements[h0] + &ComplexMatrix::outer(&b0);
    elements[h1] = &elements[h1] + &ComplexMatrix::outer(&b1);
    let grid_pom = Pom::from_elements_unchecked(elements);
    let grid_pe = error_probability(&grid_pom, e)?;
    if grid_pe < best_pe {
        best_pom = grid_pom;
    }
    SolverResult::finish(best_pom, e, grid_steps * grid_steps, true, tol)
}

/// Gap above which an independent oracle beating the iteration is flagged.
pub const ORACLE_DISAGREEMENT: f64 = 1e-4;

/// Grid used by [`cross_check`] for qubit ensembles.
pub const CROSS_CHECK_GRID: usize = 128;

/// The other oracles' errors for an ensemble, next to an iterative result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    /// Present for two-member ensembles.
    pub helstrom_error_probability: Option<f64>,
    /// Present for qubit ensembles.
    pub projective_grid_error_probability: Option<f64>,
    /// True when an oracle beats `iterative_error` by more than
    /// [`ORACLE_DISAGREEMENT`], i.e. the iteration missed the optimum.
    pub flagged: bool,
}

/// Runs whichever independent oracles apply to `e` and compares them with
/// an error probability found by [`optimize_min_error`].
///
/// The projective grid is only an upper bound on the optimum for more than
/// two hypotheses, so only the direction "oracle is better" is flagged.
pub fn cross_check(e: &Ensemble, iterative_error: f64, tol: &Tolerances) -> Result<OracleCheck> {
    let helstrom = if e.len() == 2 {
        Some(helstrom_two_state(e, tol)?.error_probability)
    } else {
        None
    };
    let grid = if e.dim() == 2 {
        Some(brute_force_projective(e, CROSS_CHECK_GRID, tol)?.error_probability)
    } else {
        None
    };
    let flagged = helstrom
        .iter()
        .chain(&grid)
        .any(|&oracle| oracle < iterative_error - ORACLE_DISAGREEMENT);
    Ok(OracleCheck {
        helstrom_error_probability: helstrom,
        projective_grid_error_probability: grid,
        flagged,
    })
}
