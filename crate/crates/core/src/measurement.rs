//! Probability operator measures (POMs) and their outcome statistics.
//!
//! A POM here has exactly one element per hypothesis: outcome `k` means
//! "assign hypothesis `k`".

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ensemble::{
    matrix_from_pairs, matrix_to_pairs, parse_dimension, parse_json_object, ComplexPair, DensityMatrix,
    Ensemble,
};
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian_with_tol, ComplexMatrix, Tolerances};

const PROB_SLACK: f64 = 1e-9;
const IMAG_TRACE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Pom {
    dim: usize,
    elements: Vec<ComplexMatrix>,
}

impl Pom {
    /// Validates Hermiticity, positivity and completeness of the elements.
    pub fn new(elements: Vec<ComplexMatrix>, tol: &Tolerances) -> Result<Self> {
        let pom = Self::from_elements_unchecked(elements);
        let problems = pom.violations(tol);
        if problems.is_empty() {
            Ok(pom)
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn from_elements_unchecked(elements: Vec<ComplexMatrix>) -> Self {
        let dim = elements.first().map_or(0, ComplexMatrix::dim);
        Self { dim, elements }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn element(&self, k: usize) -> &ComplexMatrix {
        &self.elements[k]
    }

    /// Human-readable list of every violated POM constraint.
    pub fn violations(&self, tol: &Tolerances) -> Vec<String> {
        let mut out = Vec::new();
        if self.elements.is_empty() {
            out.push("POM has no elements".to_string());
            return out;
        }
        let mut total = ComplexMatrix::zeros(self.dim);
        for (k, el) in self.elements.iter().enumerate() {
            if el.dim() != self.dim {
                out.push(format!("element {k}: dimension {} differs from {}", el.dim(), self.dim));
                continue;
            }
            let herm = el.hermiticity_residual();
            if herm > tol.herm_tol {
                out.push(format!("element {k}: hermiticity residual {herm:e} exceeds {:e}", tol.herm_tol));
            }
            let min_eig = eig_hermitian_with_tol(&el.hermitian_part(), f64::INFINITY)
                .map(|e| e.min_value())
                .unwrap_or(f64::NAN);
            if !(min_eig >= -tol.psd_tol) {
                out.push(format!("element {k}: min eigenvalue {min_eig:e} below -{:e}", tol.psd_tol));
            }
            total = &total + el;
        }
        let completeness = (&total - &ComplexMatrix::identity(self.dim)).max_norm();
        if !(completeness <= tol.herm_tol) {
            out.push(format!(
                "elements sum to identity only within {completeness:e} (tolerance {:e})",
                tol.herm_tol
            ));
        }
        out
    }

    /// Same elements reordered: new element `i` is old element `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            dim: self.dim,
            elements: perm.iter().map(|&i| self.elements[i].clone()).collect(),
        }
    }

    pub fn conjugate_by(&self, unitary: &ComplexMatrix) -> Self {
        let adj = unitary.adjoint();
        Self {
            dim: self.dim,
            elements: self
                .elements
                .iter()
                .map(|el| (&(unitary * el) * &adj).hermitian_part())
                .collect(),
        }
    }
}

pub(crate) fn check_compatible(pom: &Pom, e: &Ensemble) -> Result<()> {
    if pom.len() != e.len() {
        return Err(Error::CountMismatch {
            what: "POM elements vs ensemble members",
            expected: e.len(),
            found: pom.len(),
        });
    }
    if pom.dim() != e.dim() {
        return Err(Error::DimensionMismatch {
            expected: e.dim(),
            found: pom.dim(),
        });
    }
    Ok(())
}

/// The guessing POM: element `j` is the identity, every other element is zero.
pub fn guess_pom(j: usize, n: usize, dim: usize) -> Result<Pom> {
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, len: n });
    }
    let elements = (0..n)
        .map(|k| {
            if k == j {
                ComplexMatrix::identity(dim)
            } else {
                ComplexMatrix::zeros(dim)
            }
        })
        .collect();
    Ok(Pom { dim, elements })
}

/// `Tr(Π_k ρ)`.
pub fn outcome_probability(pom: &Pom, k: usize, rho: &DensityMatrix) -> Result<f64> {
    if k >= pom.len() {
        return Err(Error::IndexOutOfRange { index: k, len: pom.len() });
    }
    if rho.dim() != pom.dim() {
        return Err(Error::DimensionMismatch {
            expected: pom.dim(),
            found: rho.dim(),
        });
    }
    let el = &pom.elements[k];
    let m = rho.matrix();
    let n = pom.dim();
    let mut tr = num_complex::Complex64::new(0.0, 0.0);
    for i in 0..n {
        for l in 0..n {
            tr += el[(i, l)] * m[(l, i)];
        }
    }
    if tr.im.abs() > IMAG_TRACE_TOL {
        return Err(Error::ComplexTrace(tr.im));
    }
    Ok(tr.re)
}

/// Conditional, marginal and posterior probabilities for a POM on an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeTable {
    /// `p_cond[k][j] = P(k|j)`.
    pub p_cond: Vec<Vec<f64>>,
    /// `p_marginal[k] = P(k)`.
    pub p_marginal: Vec<f64>,
    /// `posterior[j][k] = P(j|k)`; `None` where `P(k)` is at or below `zero_tol`.
    pub posterior: Vec<Vec<Option<f64>>>,
}

impl OutcomeTable {
    /// Most likely hypothesis after observing outcome `k`, if `P(k) > 0`.
    pub fn most_likely_given(&self, k: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (j, row) in self.posterior.iter().enumerate() {
            let p = row[k]?;
            if best.is_none_or(|(_, b)| p > b) {
                best = Some((j, p));
            }
        }
        best.map(|(j, _)| j)
    }

    /// True when hypothesis `j` stays (weakly) most likely for every
    /// outcome that can occur.
    pub fn remains_most_likely(&self, j: usize, slack: f64) -> bool {
        (0..self.p_marginal.len()).all(|k| {
            let Some(pj) = self.posterior[j][k] else { return true };
            self.posterior.iter().all(|row| row[k].is_none_or(|p| p <= pj + slack))
        })
    }
}

pub fn outcome_table(pom: &Pom, e: &Ensemble) -> Result<OutcomeTable> {
    outcome_table_with(pom, e, &Tolerances::default())
}

pub fn outcome_table_with(pom: &Pom, e: &Ensemble, tol: &Tolerances) -> Result<OutcomeTable> {
    check_compatible(pom, e)?;
    let n = e.len();
    let mut p_cond = vec![vec![0.0; n]; n];
    for (k, row) in p_cond.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let p = outcome_probability(pom, k, e.state(j))?;
            if !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&p) {
                return Err(Error::Validation(vec![format!(
                    "P({k}|{j}) = {p} lies outside [0, 1]"
                )]));
            }
            *cell = p.clamp(0.0, 1.0);
        }
    }
    let priors = e.priors();
    let p_marginal: Vec<f64> = p_cond
        .iter()
        .map(|row| row.iter().zip(&priors).map(|(c, p)| c * p).sum::<f64>().clamp(0.0, 1.0))
        .collect();
    let posterior = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| {
                    (p_marginal[k] > tol.zero_tol)
                        .then(|| (priors[j] * p_cond[k][j] / p_marginal[k]).clamp(0.0, 1.0))
                })
                .collect()
        })
        .collect();
    Ok(OutcomeTable {
        p_cond,
        p_marginal,
        posterior,
    })
}

/// `P_e = 1 − Σ_k p_k Tr(Π_k ρ_k)`.
pub fn error_probability(pom: &Pom, e: &Ensemble) -> Result<f64> {
    check_compatible(pom, e)?;
    let mut success = 0.0;
    for k in 0..e.len() {
        success += e.prior(k) * outcome_probability(pom, k, e.state(k))?;
    }
    Ok((1.0 - success).clamp(0.0, 1.0))
}

/// Shannon mutual information (bits) between hypothesis and outcome.
///
/// Columns `P(·|j)` are renormalized to sum to one before use; when all
/// columns with nonzero prior agree within `zero_tol` the result is exactly 0.
pub fn mutual_information(pom: &Pom, e: &Ensemble) -> Result<f64> {
    mutual_information_with(pom, e, &Tolerances::default())
}

pub fn mutual_information_with(pom: &Pom, e: &Ensemble, tol: &Tolerances) -> Result<f64> {
    let table = outcome_table_with(pom, e, tol)?;
    let n = e.len();
    let priors = e.priors();
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let col: Vec<f64> = (0..n).map(|k| table.p_cond[k][j]).collect();
            let sum: f64 = col.iter().sum();
            if sum > 0.0 {
                col.into_iter().map(|x| x / sum).collect()
            } else {
                col
            }
        })
        .collect();

    let live: Vec<usize> = (0..n).filter(|&j| priors[j] > 0.0).collect();
    let identical = live.windows(2).all(|w| {
        columns[w[0]]
            .iter()
            .zip(&columns[w[1]])
            .all(|(a, b)| (a - b).abs() <= tol.zero_tol)
    });
    if identical {
        return Ok(0.0);
    }

    let marginal: Vec<f64> = (0..n)
        .map(|k| live.iter().map(|&j| priors[j] * columns[j][k]).sum())
        .collect();
    let mut info = 0.0;
    for &j in &live {
        for k in 0..n {
            let q = columns[j][k];
            if q > 0.0 && marginal[k] > 0.0 {
                info += priors[j] * q * (q / marginal[k]).log2();
            }
        }
    }
    if info < -1e-9 {
        return Err(Error::Validation(vec![format!("mutual information {info:e} is negative")]));
    }
    Ok(info.max(0.0))
}

#[derive(Serialize, Deserialize)]
struct PomFile {
    dimension: usize,
    elements: Vec<Vec<Vec<ComplexPair>>>,
}

/// Parses the POM file format without checking POM constraints.
pub fn parse_pom(text: &str) -> Result<Pom> {
    let map = parse_json_object(text)?;
    let dim = parse_dimension(&map)?;
    let elements = map
        .get("elements")
        .ok_or_else(|| Error::Parse("missing field `elements`".into()))?
        .as_array()
        .ok_or_else(|| Error::Parse("`elements` must be an array".into()))?;
    let mut out = Vec::with_capacity(elements.len());
    for (idx, raw) in elements.iter().enumerate() {
        let rows: Vec<Vec<ComplexPair>> = serde_json::from_value::<Vec<Vec<ComplexPair>>>(Value::clone(raw))
            .map_err(|e| Error::Parse(format!("element {idx}: {e}")))?;
        let m = matrix_from_pairs(&rows).map_err(|e| Error::Parse(format!("element {idx}: {e}")))?;
        if m.dim() != dim {
            return Err(Error::Parse(format!(
                "element {idx}: dimension {} differs from declared {dim}",
                m.dim()
            )));
        }
        out.push(m);
    }
    if out.is_empty() {
        return Err(Error::Parse("`elements` is empty".into()));
    }
    Ok(Pom { dim, elements: out })
}

pub fn pom_from_json(text: &str, tol: &Tolerances) -> Result<Pom> {
    let pom = parse_pom(text)?;
    let problems = pom.violations(tol);
    if problems.is_empty() {
        Ok(pom)
    } else {
        Err(Error::Validation(problems))
    }
}

pub fn pom_to_json(pom: &Pom) -> String {
    let file = PomFile {
        dimension: pom.dim,
        elements: pom.elements.iter().map(matrix_to_pairs).collect(),
    };
    serde_json::to_string_pretty(&file).expect("POM serializes")
}

pub fn load_pom(path: impl AsRef<Path>) -> Result<Pom> {
    pom_from_json(&std::fs::read_to_string(path)?, &Tolerances::default())
}

pub fn save_pom(pom: &Pom, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, pom_to_json(pom) + "\n")?;
    Ok(())
}
