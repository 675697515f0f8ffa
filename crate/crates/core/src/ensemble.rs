//! Quantum states, the hypothesis ensemble `{p_k, ρ_k}` and its file format.
//!
//! The on-disk format is JSON:
//!
//! ```json
//! { "dimension": 2,
//!   "members": [ { "prior": 0.5, "matrix": [[[0.5,0],[0,0]],[[0,0],[0.5,0]]] },
//!                { "prior": 0.5, "pure": [[1,0],[0,0]] } ] }
//! ```
//!
//! Complex numbers are `[re, im]` pairs. `matrix` and `pure` are mutually
//! exclusive. Saved files always use the `matrix` form.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian_with_tol, ComplexMatrix, Tolerances, C64};

/// Hermitian, PSD, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

/// Per-state residuals against the density-matrix invariants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateResiduals {
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
    pub trace_deviation: f64,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        let state = Self { matrix };
        let r = state.residuals();
        let mut problems = Vec::new();
        if r.hermiticity > tol.herm_tol {
            problems.push(format!("hermiticity residual {:e} exceeds {:e}", r.hermiticity, tol.herm_tol));
        }
        if r.min_eigenvalue < -tol.psd_tol {
            problems.push(format!("min eigenvalue {:e} below -{:e}", r.min_eigenvalue, tol.psd_tol));
        }
        if r.trace_deviation > tol.trace_tol {
            problems.push(format!("trace deviation {:e} exceeds {:e}", r.trace_deviation, tol.trace_tol));
        }
        if problems.is_empty() {
            Ok(state)
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Wraps a matrix without checking the invariants; see [`validate_ensemble`].
    pub fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn residuals(&self) -> StateResiduals {
        let hermiticity = self.matrix.hermiticity_residual();
        let min_eigenvalue = eig_hermitian_with_tol(&self.matrix.hermitian_part(), f64::INFINITY)
            .map(|e| e.min_value())
            .unwrap_or(f64::NAN);
        let tr = self.matrix.trace();
        let trace_deviation = (tr - C64::new(1.0, 0.0)).norm();
        StateResiduals {
            hermiticity,
            min_eigenvalue,
            trace_deviation,
        }
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, unitary: &ComplexMatrix) -> Self {
        Self {
            matrix: (&(unitary * &self.matrix) * &unitary.adjoint()).hermitian_part(),
        }
    }
}

/// Unit-norm state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Validation(vec!["state vector is empty".into()]));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation(vec!["state vector has non-finite entries".into()]));
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(vec![format!(
                "state vector norm {norm} is not 1 within 1e-9"
            )]));
        }
        Ok(Self { amplitudes })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }
}

/// `|ψ⟩⟨ψ|`.
pub fn make_pure(v: &PureState) -> DensityMatrix {
    DensityMatrix::from_matrix_unchecked(ComplexMatrix::outer(v.amplitudes()))
}

/// `(1/D)·1`.
pub fn maximally_mixed(dim: usize) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(Error::Validation(vec!["dimension must be at least 1".into()]));
    }
    Ok(DensityMatrix::from_matrix_unchecked(
        ComplexMatrix::identity(dim).scale(1.0 / dim as f64),
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    pub prior: f64,
    pub state: DensityMatrix,
}

/// Ordered hypothesis set. Member order is hypothesis order.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    dim: usize,
    members: Vec<Member>,
}

impl Ensemble {
    /// Builds and validates an ensemble with the given tolerances.
    pub fn new(members: Vec<Member>, tol: &Tolerances) -> Result<Self> {
        let e = Self::from_members_unchecked(members);
        let report = validate_ensemble(&e, tol);
        if report.valid {
            Ok(e)
        } else {
            Err(Error::Validation(report.diagnostics()))
        }
    }

    pub fn from_pairs(pairs: Vec<(f64, DensityMatrix)>, tol: &Tolerances) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(prior, state)| Member { prior, state })
                .collect(),
            tol,
        )
    }

    /// No invariant checks; the dimension is taken from the first member.
    pub fn from_members_unchecked(members: Vec<Member>) -> Self {
        let dim = members.first().map_or(0, |m| m.state.dim());
        Self { dim, members }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn prior(&self, k: usize) -> f64 {
        self.members[k].prior
    }

    pub fn state(&self, k: usize) -> &DensityMatrix {
        &self.members[k].state
    }

    pub fn priors(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.prior).collect()
    }

    pub fn max_prior(&self) -> f64 {
        self.members.iter().map(|m| m.prior).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest index attaining the maximum prior.
    pub fn argmax_prior(&self) -> usize {
        let max = self.max_prior();
        self.members.iter().position(|m| m.prior == max).unwrap_or(0)
    }

    /// `p_k ρ_k`.
    pub fn weighted_state(&self, k: usize) -> ComplexMatrix {
        self.members[k].state.matrix().scale(self.members[k].prior)
    }

    /// Applies `ρ_k → U ρ_k U†` to every member.
    pub fn conjugate_by(&self, unitary: &ComplexMatrix) -> Self {
        Self {
            dim: self.dim,
            members: self
                .members
                .iter()
                .map(|m| Member {
                    prior: m.prior,
                    state: m.state.conjugate_by(unitary),
                })
                .collect(),
        }
    }

    /// Same states with the members permuted: new member `i` is old member `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            dim: self.dim,
            members: perm.iter().map(|&i| self.members[i].clone()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Empty,
    Dimension,
    Hermiticity,
    Psd,
    Trace,
    Prior,
    PriorSum,
}

/// One invariant violation. `member` is `None` for ensemble-wide problems.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub member: Option<usize>,
    pub kind: ViolationKind,
    pub residual: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub prior_sum_residual: f64,
    pub member_residuals: Vec<StateResiduals>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn diagnostics(&self) -> Vec<String> {
        self.violations
            .iter()
            .map(|v| {
                let who = v.member.map_or_else(|| "ensemble".to_string(), |m| format!("member {m}"));
                format!(
                    "{who}: {:?} residual {:e} exceeds tolerance {:e}",
                    v.kind, v.residual, v.tolerance
                )
            })
            .collect()
    }
}

/// Lists every invariant violation of `e`; never fails.
pub fn validate_ensemble(e: &Ensemble, tol: &Tolerances) -> ValidationReport {
    let mut violations = Vec::new();
    if e.members.is_empty() {
        violations.push(Violation {
            member: None,
            kind: ViolationKind::Empty,
            residual: 1.0,
            tolerance: 0.0,
        });
    }
    let mut member_residuals = Vec::with_capacity(e.len());
    for (idx, m) in e.members.iter().enumerate() {
        let mut push = |kind, residual, tolerance| {
            violations.push(Violation {
                member: Some(idx),
                kind,
                residual,
                tolerance,
            })
        };
        if m.state.dim() != e.dim {
            push(
                ViolationKind::Dimension,
                (m.state.dim() as f64 - e.dim as f64).abs(),
                0.0,
            );
        }
        if !m.prior.is_finite() || m.prior < 0.0 {
            push(ViolationKind::Prior, -m.prior, 0.0);
        } else if m.prior > 1.0 + tol.trace_tol {
            push(ViolationKind::Prior, m.prior - 1.0, tol.trace_tol);
        }
        let r = m.state.residuals();
        if r.hermiticity > tol.herm_tol {
            push(ViolationKind::Hermiticity, r.hermiticity, tol.herm_tol);
        }
        if !(r.min_eigenvalue >= -tol.psd_tol) {
            push(ViolationKind::Psd, -r.min_eigenvalue, tol.psd_tol);
        }
        if r.trace_deviation > tol.trace_tol {
            push(ViolationKind::Trace, r.trace_deviation, tol.trace_tol);
        }
        member_residuals.push(r);
    }
    let prior_sum_residual = (e.members.iter().map(|m| m.prior).sum::<f64>() - 1.0).abs();
    if !e.members.is_empty() && !(prior_sum_residual <= tol.trace_tol) {
        violations.push(Violation {
            member: None,
            kind: ViolationKind::PriorSum,
            residual: prior_sum_residual,
            tolerance: tol.trace_tol,
        });
    }
    ValidationReport {
        valid: violations.is_empty(),
        prior_sum_residual,
        member_residuals,
        violations,
    }
}

pub(crate) type ComplexPair = [f64; 2];

pub(crate) fn to_pairs(v: &[C64]) -> Vec<ComplexPair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub(crate) fn from_pairs(v: &[ComplexPair]) -> Vec<C64> {
    v.iter().map(|p| C64::new(p[0], p[1])).collect()
}

pub(crate) fn matrix_to_pairs(m: &ComplexMatrix) -> Vec<Vec<ComplexPair>> {
    m.rows().iter().map(|r| to_pairs(r)).collect()
}

pub(crate) fn matrix_from_pairs(rows: &[Vec<ComplexPair>]) -> Result<ComplexMatrix> {
    ComplexMatrix::from_rows(rows.iter().map(|r| from_pairs(r)).collect())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MemberFile {
    prior: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<ComplexPair>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pure: Option<Vec<ComplexPair>>,
}

#[derive(Serialize)]
struct EnsembleFile {
    dimension: usize,
    members: Vec<MemberFile>,
}

pub(crate) fn parse_json_object(text: &str) -> Result<serde_json::Map<String, Value>> {
    match serde_json::from_str::<Value>(text).map_err(|e| Error::Parse(e.to_string()))? {
        Value::Object(map) => Ok(map),
        _ => Err(Error::Parse("top level must be an object".into())),
    }
}

pub(crate) fn parse_dimension(map: &serde_json::Map<String, Value>) -> Result<usize> {
    let dim = map
        .get("dimension")
        .ok_or_else(|| Error::Parse("missing field `dimension`".into()))?
        .as_u64()
        .ok_or_else(|| Error::Parse("`dimension` must be a positive integer".into()))?;
    if dim == 0 {
        return Err(Error::Parse("`dimension` must be a positive integer".into()));
    }
    Ok(dim as usize)
}

/// Parses the ensemble file format without checking state invariants.
///
/// Structural problems (missing fields, both or neither of `matrix`/`pure`,
/// ragged matrices) are parse errors naming the member index. Pure vectors
/// that are not normalized are validation errors.
pub fn parse_ensemble(text: &str) -> Result<Ensemble> {
    let map = parse_json_object(text)?;
    let dim = parse_dimension(&map)?;
    let members = map
        .get("members")
        .ok_or_else(|| Error::Parse("missing field `members`".into()))?
        .as_array()
        .ok_or_else(|| Error::Parse("`members` must be an array".into()))?;
    let mut out = Vec::with_capacity(members.len());
    for (idx, raw) in members.iter().enumerate() {
        let member: MemberFile = serde_json::from_value(raw.clone())
            .map_err(|e| Error::Parse(format!("member {idx}: {e}")))?;
        let state = match (member.matrix, member.pure) {
            (Some(rows), None) => DensityMatrix::from_matrix_unchecked(
                matrix_from_pairs(&rows).map_err(|e| Error::Parse(format!("member {idx}: {e}")))?,
            ),
            (None, Some(vec)) => {
                let psi = PureState::new(from_pairs(&vec)).map_err(|e| match e {
                    Error::Validation(msgs) => Error::Validation(
                        msgs.into_iter().map(|m| format!("member {idx}: {m}")).collect(),
                    ),
                    other => other,
                })?;
                make_pure(&psi)
            }
            (Some(_), Some(_)) => {
                return Err(Error::Parse(format!(
                    "member {idx}: `matrix` and `pure` are mutually exclusive"
                )))
            }
            (None, None) => {
                return Err(Error::Parse(format!(
                    "member {idx}: one of `matrix` or `pure` is required"
                )))
            }
        };
        out.push(Member {
            prior: member.prior,
            state,
        });
    }
    Ok(Ensemble { dim, members: out })
}

/// Parses and validates.
pub fn ensemble_from_json(text: &str, tol: &Tolerances) -> Result<Ensemble> {
    let e = parse_ensemble(text)?;
    let report = validate_ensemble(&e, tol);
    if report.valid {
        Ok(e)
    } else {
        Err(Error::Validation(report.diagnostics()))
    }
}

pub fn ensemble_to_json(e: &Ensemble) -> String {
    let file = EnsembleFile {
        dimension: e.dim,
        members: e
            .members
            .iter()
            .map(|m| MemberFile {
                prior: m.prior,
                matrix: Some(matrix_to_pairs(m.state.matrix())),
                pure: None,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("ensemble serializes")
}

/// Reads and validates an ensemble file with default tolerances.
pub fn load_ensemble(path: impl AsRef<Path>) -> Result<Ensemble> {
    load_ensemble_with(path, &Tolerances::default())
}

pub fn load_ensemble_with(path: impl AsRef<Path>, tol: &Tolerances) -> Result<Ensemble> {
    ensemble_from_json(&std::fs::read_to_string(path)?, tol)
}

pub fn save_ensemble(e: &Ensemble, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, ensemble_to_json(e) + "\n")?;
    Ok(())
}
