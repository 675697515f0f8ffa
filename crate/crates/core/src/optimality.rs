//! Minimum-error optimality conditions and the no-measurement criterion.
//!
//! For a POM `{Π_k}` on `{p_k, ρ_k}` the operator `Γ = Σ_j p_j Π_j ρ_j`
//! certifies optimality when `Γ − p_k ρ_k` is Hermitian and PSD for every
//! `k`. A weaker consequence is `(Γ − p_k ρ_k) Π_k = 0`. For the guessing
//! POM that always answers `j`, `Γ = p_j ρ_j` and the sufficient condition
//! becomes `p_j ρ_j − p_k ρ_k ≥ 0` for all `k`: no measurement beats
//! guessing `j`.

use serde::{Deserialize, Serialize};

use crate::ensemble::{validate_ensemble, Ensemble};
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian_with_tol, support_contains, ComplexMatrix, Tolerances};
use crate::measurement::{check_compatible, Pom};
use crate::par::map_indexed;

/// `Γ = Σ_j p_j Π_j ρ_j`, products taken in that order.
pub fn lagrangian_operator(pom: &Pom, e: &Ensemble) -> Result<ComplexMatrix> {
    check_compatible(pom, e)?;
    let mut gamma = ComplexMatrix::zeros(e.dim());
    for j in 0..e.len() {
        let term = (pom.element(j) * e.state(j).matrix()).scale(e.prior(j));
        gamma = &gamma + &term;
    }
    Ok(gamma)
}

fn min_eig_of_hermitian_part(m: &ComplexMatrix) -> f64 {
    eig_hermitian_with_tol(&m.hermitian_part(), f64::INFINITY)
        .expect("Hermitian part is Hermitian")
        .min_value()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalityReport {
    pub gamma: ComplexMatrix,
    /// Max-norm of `Γ − Γ†`.
    pub hermiticity_residual: f64,
    /// Minimum eigenvalue of (the Hermitian part of) `Γ − p_k ρ_k`.
    pub per_k_min_eigenvalue: Vec<f64>,
    /// Max-norm of `(Γ − p_k ρ_k) Π_k`.
    pub per_k_eq4_residual: Vec<f64>,
    pub satisfied_sufficient: bool,
    pub satisfied_necessary: bool,
}

impl OptimalityReport {
    pub fn min_margin(&self) -> f64 {
        self.per_k_min_eigenvalue.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_eq4_residual(&self) -> f64 {
        self.per_k_eq4_residual.iter().copied().fold(0.0, f64::max)
    }
}

/// Evaluates both optimality conditions for `pom` on `e`.
pub fn check_min_error(pom: &Pom, e: &Ensemble, tol: &Tolerances) -> Result<OptimalityReport> {
    let gamma = lagrangian_operator(pom, e)?;
    let hermiticity_residual = gamma.hermiticity_residual();
    let per_k: Vec<(f64, f64)> = map_indexed(e.len(), |k| {
        let diff = &gamma - &e.weighted_state(k);
        let min_eig = min_eig_of_hermitian_part(&diff);
        let stationarity = (&diff * pom.element(k)).max_norm();
        (min_eig, stationarity)
    });
    let per_k_min_eigenvalue: Vec<f64> = per_k.iter().map(|p| p.0).collect();
    let per_k_eq4_residual: Vec<f64> = per_k.iter().map(|p| p.1).collect();
    let satisfied_sufficient = hermiticity_residual <= tol.herm_tol
        && per_k_min_eigenvalue.iter().all(|&m| m >= -tol.psd_tol);
    let satisfied_necessary = per_k_eq4_residual.iter().all(|&r| r <= tol.herm_tol);
    Ok(OptimalityReport {
        gamma,
        hermiticity_residual,
        per_k_min_eigenvalue,
        per_k_eq4_residual,
        satisfied_sufficient,
        satisfied_necessary,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMargin {
    pub k: usize,
    /// Minimum eigenvalue of `p_j ρ_j − p_k ρ_k`.
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoMeasurementReport {
    pub candidate_j: usize,
    /// Every index whose prior ties the maximum (within `zero_tol`).
    pub tied_candidates: Vec<usize>,
    pub per_k_min_eigenvalue: Vec<KMargin>,
    pub prior_condition: bool,
    pub span_condition: bool,
    pub satisfied: bool,
    /// Minimum over `k ≠ j`; 0 for a single-member ensemble.
    pub margin: f64,
}

fn evaluate_candidate(e: &Ensemble, j: usize, tol: &Tolerances) -> Result<NoMeasurementReport> {
    let others: Vec<usize> = (0..e.len()).filter(|&k| k != j).collect();
    let weighted_j = e.weighted_state(j);
    let per_k_min_eigenvalue: Vec<KMargin> = map_indexed(others.len(), |i| {
        let k = others[i];
        KMargin {
            k,
            min_eigenvalue: min_eig_of_hermitian_part(&(&weighted_j - &e.weighted_state(k))),
        }
    });
    let margin = per_k_min_eigenvalue
        .iter()
        .map(|m| m.min_eigenvalue)
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.min(x))))
        .unwrap_or(0.0);
    let pj = e.prior(j);
    let prior_condition = others.iter().all(|&k| pj >= e.prior(k) - tol.zero_tol);
    let mut span_condition = true;
    for &k in &others {
        if e.prior(k) <= tol.zero_tol {
            continue;
        }
        if !support_contains(e.state(j).matrix(), e.state(k).matrix(), tol.psd_tol)? {
            span_condition = false;
            break;
        }
    }
    Ok(NoMeasurementReport {
        candidate_j: j,
        tied_candidates: Vec::new(),
        per_k_min_eigenvalue,
        prior_condition,
        span_condition,
        satisfied: margin >= -tol.psd_tol,
        margin,
    })
}

/// Decides whether always guessing the most likely hypothesis is optimal.
///
/// Every index tying for the largest prior is tried; the report is for the
/// lowest passing index, or the lowest tied index when none pass.
pub fn check_no_measurement(e: &Ensemble, tol: &Tolerances) -> Result<NoMeasurementReport> {
    let validation = validate_ensemble(e, tol);
    if !validation.valid {
        return Err(Error::Validation(validation.diagnostics()));
    }
    let max = e.max_prior();
    let tied: Vec<usize> = (0..e.len()).filter(|&j| e.prior(j) >= max - tol.zero_tol).collect();
    let mut first = None;
    for &j in &tied {
        let report = evaluate_candidate(e, j, tol)?;
        if report.satisfied {
            return Ok(NoMeasurementReport {
                tied_candidates: tied,
                ..report
            });
        }
        first.get_or_insert(report);
    }
    let report = first.expect("ensemble is nonempty");
    Ok(NoMeasurementReport {
        tied_candidates: tied,
        ..report
    })
}

fn check_index(e: &Ensemble, j: usize) -> Result<()> {
    if j < e.len() {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { index: j, len: e.len() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureConditionRecord {
    pub k: usize,
    /// `p_j ⟨ψ_k|ρ_j|ψ_k⟩`.
    pub lhs: f64,
    /// `p_k`.
    pub rhs: f64,
    pub ok: bool,
}

/// Pure-signal form of the no-measurement test: `p_j ⟨ψ_k|ρ_j|ψ_k⟩ ≥ p_k`.
///
/// Requires every member other than `j` to be rank one. The test is
/// necessary for `p_j ρ_j ≥ p_k |ψ_k⟩⟨ψ_k|`, and equivalent to it when each
/// `ψ_k` is an eigenvector of `ρ_j` (in particular when `ρ_j ∝ 1`).
pub fn check_pure_state_condition(e: &Ensemble, j: usize, tol: &Tolerances) -> Result<Vec<PureConditionRecord>> {
    check_index(e, j)?;
    let rho_j = e.state(j).matrix();
    let mut out = Vec::with_capacity(e.len().saturating_sub(1));
    for k in (0..e.len()).filter(|&k| k != j) {
        let eig = eig_hermitian_with_tol(&e.state(k).matrix().hermitian_part(), f64::INFINITY)?;
        let n = eig.values.len();
        let top = eig.values[n - 1];
        if (top - 1.0).abs() > tol.psd_tol || eig.values[..n - 1].iter().any(|l| l.abs() > tol.psd_tol) {
            return Err(Error::NotPure {
                index: k,
                detail: format!("eigenvalues {:?}", eig.values),
            });
        }
        let psi = eig.vector(n - 1);
        let lhs = e.prior(j) * rho_j.expectation(&psi).re;
        let rhs = e.prior(k);
        out.push(PureConditionRecord {
            k,
            lhs,
            rhs,
            ok: lhs >= rhs - tol.psd_tol,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub k: usize,
    pub component: usize,
    /// Eigenvalue `w_i` of `ρ_k`.
    pub weight: f64,
    /// `p_j ⟨φ_i|ρ_j|φ_i⟩`.
    pub lhs: f64,
    /// `p_k w_i`.
    pub rhs: f64,
    pub ok: bool,
}

/// Per-component relations for mixed `ρ_k`, using the eigendecomposition
/// `ρ_k = Σ_i w_i |φ_i⟩⟨φ_i|`. Necessary conditions only; the verdict of
/// [`check_no_measurement`] is authoritative.
pub fn check_mixed_decomposition_condition(
    e: &Ensemble,
    j: usize,
    tol: &Tolerances,
) -> Result<Vec<ComponentRecord>> {
    check_index(e, j)?;
    let validation = validate_ensemble(e, tol);
    if !validation.valid {
        return Err(Error::Validation(validation.diagnostics()));
    }
    let rho_j = e.state(j).matrix();
    let mut out = Vec::new();
    for k in (0..e.len()).filter(|&k| k != j) {
        let eig = eig_hermitian_with_tol(e.state(k).matrix(), tol.herm_tol)?;
        // largest weight first
        for (component, idx) in (0..eig.values.len()).rev().enumerate() {
            let weight = eig.values[idx];
            if weight <= tol.zero_tol {
                continue;
            }
            let phi = eig.vector(idx);
            let lhs = e.prior(j) * rho_j.expectation(&phi).re;
            let rhs = e.prior(k) * weight;
            out.push(ComponentRecord {
                k,
                component,
                weight,
                lhs,
                rhs,
                ok: lhs >= rhs - tol.psd_tol,
            });
        }
    }
    Ok(out)
}
