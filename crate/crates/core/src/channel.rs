//! The failed-transmission channel: `N` equiprobable pure signal states,
//! plus a failure event that delivers the maximally mixed state with
//! probability `p_0`. Guessing "failure" is optimal iff `p_0 ≥ D/(D+N)`.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::{
    from_pairs, parse_ensemble, validate_ensemble, make_pure, maximally_mixed, parse_json_object, to_pairs, ComplexPair, Ensemble, Member,
    PureState,
};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Tolerances};
use crate::measurement::{error_probability, outcome_table_with, Pom};
use crate::par::map_indexed;
use crate::random::stream_rng;

/// Trials per Monte Carlo chunk. Chunk `c` always draws from stream `c`,
/// so tallies do not depend on how chunks are spread over threads.
pub const SIMULATION_CHUNK: u64 = 1 << 16;

const COLUMN_SUM_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSpec {
    dim: usize,
    signal_states: Vec<PureState>,
    failure_prob: f64,
}

impl ChannelSpec {
    pub fn new(dim: usize, signal_states: Vec<PureState>, failure_prob: f64) -> Result<Self> {
        let mut bad = Vec::new();
        if dim == 0 {
            bad.push("dimension must be at least 1".to_string());
        }
        if signal_states.is_empty() {
            bad.push("at least one signal state is required".to_string());
        }
        for (k, s) in signal_states.iter().enumerate() {
            if s.dim() != dim {
                bad.push(format!("signal {k} has dimension {} instead of {dim}", s.dim()));
            }
        }
        if !(0.0..=1.0).contains(&failure_prob) {
            bad.push(format!("failure_prob {failure_prob} is outside [0, 1]"));
        }
        if bad.is_empty() {
            Ok(Self {
                dim,
                signal_states,
                failure_prob,
            })
        } else {
            Err(Error::Validation(bad))
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_signals(&self) -> usize {
        self.signal_states.len()
    }

    pub fn signal_states(&self) -> &[PureState] {
        &self.signal_states
    }

    pub fn failure_prob(&self) -> f64 {
        self.failure_prob
    }

    pub fn with_failure_prob(&self, p0: f64) -> Result<Self> {
        Self::new(self.dim, self.signal_states.clone(), p0)
    }
}

/// Member 0 is the failure `(p_0, 1/D)`, members `1..=N` the signals with
/// prior `(1 − p_0)/N` each.
pub fn build_ensemble(spec: &ChannelSpec, tol: &Tolerances) -> Result<Ensemble> {
    let e = build_ensemble_unchecked(spec)?;
    Ensemble::new(e.members().to_vec(), tol)
}

pub(crate) fn build_ensemble_unchecked(spec: &ChannelSpec) -> Result<Ensemble> {
    let p0 = spec.failure_prob;
    let n = spec.num_signals();
    // the failure slot stays at index 0 even when p_0 = 0
    let mut members = Vec::with_capacity(n + 1);
    members.push(Member {
        prior: p0,
        state: maximally_mixed(spec.dim)?,
    });
    let p = (1.0 - p0) / n as f64;
    members.extend(spec.signal_states.iter().map(|s| Member {
        prior: p,
        state: make_pure(s),
    }));
    Ok(Ensemble::from_members_unchecked(members))
}

/// `D / (D + N)`.
pub fn no_measurement_threshold(dim: usize, num_signals: usize) -> Result<f64> {
    if dim == 0 || num_signals == 0 {
        return Err(Error::Validation(vec![
            "dimension and signal count must both be positive".into(),
        ]));
    }
    Ok(dim as f64 / (dim + num_signals) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimpleCondition {
    pub satisfied: bool,
    /// `min_{k≠j} (p_j/D − p_k)`; 0 for a single member.
    pub margin: f64,
}

/// `p_j / D ≥ p_k` for all `k ≠ j`, valid when member `j` is maximally mixed.
pub fn check_simple_condition(e: &Ensemble, j: usize, tol: &Tolerances) -> Result<SimpleCondition> {
    if j >= e.len() {
        return Err(Error::IndexOutOfRange { index: j, len: e.len() });
    }
    let dim = e.dim();
    let deviation = (e.state(j).matrix() - &ComplexMatrix::identity(dim).scale(1.0 / dim as f64)).max_norm();
    if deviation > tol.psd_tol {
        return Err(Error::NotMaximallyMixed { index: j, deviation });
    }
    let lhs = e.prior(j) / dim as f64;
    let margin = (0..e.len())
        .filter(|&k| k != j)
        .map(|k| lhs - e.prior(k))
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.min(x))))
        .unwrap_or(0.0);
    Ok(SimpleCondition {
        satisfied: margin >= -tol.psd_tol,
        margin,
    })
}

/// Three equatorial qubit states at 120° on the Bloch sphere:
/// `(cos(kπ/3), sin(kπ/3))` for `k = 0, 1, 2`.
pub fn trine_example(p0: f64) -> Result<ChannelSpec> {
    let signals = (0..3)
        .map(|k| {
            let a = k as f64 * std::f64::consts::PI / 3.0;
            PureState::from_real(&[a.cos(), a.sin()])
        })
        .collect::<Result<Vec<_>>>()?;
    ChannelSpec::new(2, signals, p0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub trials: u64,
    pub strategy_errors: u64,
    pub empirical_error: f64,
    /// `1 − p_max`.
    pub guess_baseline: f64,
    /// Exact error probability of the simulated POM.
    pub expected_error: f64,
    pub seed: u64,
}

struct Sampler {
    cdf: Vec<f64>,
    last_positive: usize,
}

impl Sampler {
    fn new(weights: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|w| {
                acc += w.max(0.0);
                acc
            })
            .collect();
        let last_positive = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        Self { cdf, last_positive }
    }

    fn draw(&self, u: f64) -> usize {
        let total = self.cdf[self.cdf.len() - 1];
        let target = u * total;
        self.cdf
            .iter()
            .position(|&c| target < c)
            .unwrap_or(self.last_positive)
    }
}

/// Monte Carlo estimate of the error rate of `pom` on `e`.
///
/// Each trial draws hypothesis `j` from the priors and outcome `k` from
/// `P(·|j)` by inverse-CDF sampling, counting an error when `k ≠ j`.
pub fn simulate(e: &Ensemble, pom: &Pom, trials: u64, seed: u64) -> Result<SimResult> {
    if trials == 0 {
        return Err(Error::Simulation("trials must be at least 1".into()));
    }
    let tol = Tolerances::default();
    let table = outcome_table_with(pom, e, &tol)?;
    let n = e.len();
    let prior_sum: f64 = e.priors().iter().sum();
    if (prior_sum - 1.0).abs() > COLUMN_SUM_TOL {
        return Err(Error::Simulation(format!("priors sum to {prior_sum}")));
    }
    let mut outcome_samplers = Vec::with_capacity(n);
    for j in 0..n {
        let column: Vec<f64> = (0..n).map(|k| table.p_cond[k][j]).collect();
        let sum: f64 = column.iter().sum();
        if (sum - 1.0).abs() > COLUMN_SUM_TOL {
            return Err(Error::Simulation(format!(
                "outcome probabilities for hypothesis {j} sum to {sum}"
            )));
        }
        outcome_samplers.push(Sampler::new(&column));
    }
    let prior_sampler = Sampler::new(&e.priors());

    let chunks = trials.div_ceil(SIMULATION_CHUNK);
    let tallies = map_indexed(chunks as usize, |c| {
        let c = c as u64;
        let len = SIMULATION_CHUNK.min(trials - c * SIMULATION_CHUNK);
        let mut rng = stream_rng(seed, c);
        let mut errors = 0u64;
        for _ in 0..len {
            let j = prior_sampler.draw(rng.random::<f64>());
            let k = outcome_samplers[j].draw(rng.random::<f64>());
            if k != j {
                errors += 1;
            }
        }
        errors
    });
    let strategy_errors: u64 = tallies.iter().sum();
    Ok(SimResult {
        trials,
        strategy_errors,
        empirical_error: strategy_errors as f64 / trials as f64,
        guess_baseline: 1.0 - e.max_prior(),
        expected_error: error_probability(pom, e)?,
        seed,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    dimension: usize,
    signals: Vec<Vec<ComplexPair>>,
    failure_prob: f64,
}

pub fn channel_spec_from_json(text: &str) -> Result<ChannelSpec> {
    let map = parse_json_object(text)?;
    let file: ChannelFile =
        serde_json::from_value(serde_json::Value::Object(map)).map_err(|e| Error::Parse(e.to_string()))?;
    let signals = file
        .signals
        .iter()
        .enumerate()
        .map(|(k, v)| {
            PureState::new(from_pairs(v)).map_err(|e| match e {
                Error::Validation(m) => Error::Validation(m.into_iter().map(|s| format!("signal {k}: {s}")).collect()),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ChannelSpec::new(file.dimension, signals, file.failure_prob)
}

pub fn channel_spec_to_json(spec: &ChannelSpec) -> String {
    let file = ChannelFile {
        dimension: spec.dim,
        signals: spec.signal_states.iter().map(|s| to_pairs(s.amplitudes())).collect(),
        failure_prob: spec.failure_prob,
    };
    serde_json::to_string_pretty(&file).expect("channel spec serializes")
}

pub fn load_channel_spec(path: impl AsRef<Path>) -> Result<ChannelSpec> {
    channel_spec_from_json(&std::fs::read_to_string(path)?)
}

pub fn save_channel_spec(spec: &ChannelSpec, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, channel_spec_to_json(spec) + "\n")?;
    Ok(())
}

/// Parses an ensemble file, or a channel spec file (recognized by its
/// `signals` key) expanded as in [`build_ensemble`]. No validation.
pub fn parse_ensemble_or_channel(text: &str) -> Result<Ensemble> {
    if parse_json_object(text)?.contains_key("signals") {
        build_ensemble_unchecked(&channel_spec_from_json(text)?)
    } else {
        parse_ensemble(text)
    }
}

/// Reads and validates either file format.
pub fn load_ensemble_or_channel(path: impl AsRef<Path>, tol: &Tolerances) -> Result<Ensemble> {
    let e = parse_ensemble_or_channel(&std::fs::read_to_string(path)?)?;
    let report = validate_ensemble(&e, tol);
    if report.valid {
        Ok(e)
    } else {
        Err(Error::Validation(report.diagnostics()))
    }
}
