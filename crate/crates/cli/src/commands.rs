use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use qdiscrim_core::channel::{
    build_ensemble, load_ensemble_or_channel, no_measurement_threshold, parse_ensemble_or_channel,
    save_channel_spec, simulate, trine_example,
};
use qdiscrim_core::ensemble::{save_ensemble, validate_ensemble, Ensemble};
use qdiscrim_core::measurement::{
    error_probability, guess_pom, load_pom, mutual_information, outcome_table, save_pom, OutcomeTable, Pom,
};
use qdiscrim_core::optimality::{check_min_error, check_no_measurement, OptimalityReport};
use qdiscrim_core::report::{human, to_json_string};
use qdiscrim_core::solvers::{cross_check, optimize_min_error, OracleCheck, SolverConfig, SolverResult};
use qdiscrim_core::{Error, Result, Tolerances};

use crate::args::{Command, Strategy};
use crate::exit;

/// Appends one line to a report buffer.
macro_rules! say {
    ($out:expr, $($arg:tt)*) => {{
        use std::fmt::Write as _;
        writeln!($out, $($arg)*).expect("writing to a String cannot fail");
    }};
}

/// Runs a command and returns its exit code.
///
/// Reports are buffered and written in one go, so a closed stdout (say, a
/// pager quitting early) cannot abort a command halfway or panic.
pub fn dispatch(command: Command) -> u8 {
    let tol = Tolerances::default();
    let mut out = String::new();
    let outcome = match command {
        Command::Validate { ensemble, json } => validate(&mut out, &ensemble, json, &tol),
        Command::CheckNoMeasurement { ensemble, json } => no_measurement(&mut out, &ensemble, json, &tol),
        Command::CheckOptimal { ensemble, pom, json } => check_optimal(&mut out, &ensemble, &pom, json, &tol),
        Command::Threshold { dim, num_signals } => threshold(&mut out, dim, num_signals),
        Command::Optimize {
            ensemble,
            seed,
            restarts,
            max_iterations,
            pom_out,
            json,
        } => {
            let cfg = SolverConfig {
                seed,
                restarts: restarts as usize,
                max_iterations: max_iterations as usize,
                ..Default::default()
            };
            optimize(&mut out, &ensemble, &cfg, pom_out.as_deref(), json, &tol)
        }
        Command::Simulate {
            ensemble,
            strategy,
            trials,
            seed,
            json,
        } => run_simulation(&mut out, &ensemble, &strategy, trials, seed, json, &tol),
        Command::Info { ensemble, strategy, json } => info(&mut out, &ensemble, &strategy, json, &tol),
        Command::Trine { p0, out: path, spec_out } => trine(&mut out, p0, &path, spec_out.as_deref(), &tol),
    };
    let code = match outcome {
        Ok(code) => code,
        Err(err) => {
            let _ = writeln!(io::stderr(), "qdiscrim: {err}");
            exit::for_error(&err)
        }
    };
    let mut stdout = io::stdout().lock();
    match stdout.write_all(out.as_bytes()).and_then(|()| stdout.flush()) {
        Ok(()) => code,
        Err(err) if err.kind() == io::ErrorKind::BrokenPipe => code,
        Err(err) => {
            let _ = writeln!(io::stderr(), "qdiscrim: cannot write report: {err}");
            exit::IO_OR_PARSE
        }
    }
}

fn emit<T: Serialize>(out: &mut String, report: &T) {
    say!(out, "{}", to_json_string(report));
}

fn load_strategy(strategy: &Strategy, e: &Ensemble) -> Result<Pom> {
    match (&strategy.pom, strategy.guess) {
        (Some(path), _) => load_pom(path),
        (None, Some(j)) => guess_pom(j, e.len(), e.dim()),
        (None, None) => unreachable!("clap requires a strategy"),
    }
}

fn validate(out: &mut String, path: &Path, json: bool, tol: &Tolerances) -> Result<u8> {
    let e = parse_ensemble_or_channel(&std::fs::read_to_string(path)?)?;
    let report = validate_ensemble(&e, tol);
    if json {
        emit(out, &report);
    } else {
        say!(out, "members: {}", e.len());
        say!(out, "dimension: {}", e.dim());
        say!(out, "prior sum residual: {}", human(report.prior_sum_residual));
        for line in report.diagnostics() {
            say!(out, "violation: {line}");
        }
        say!(out, "valid: {}", report.valid);
    }
    Ok(if report.valid { exit::OK } else { exit::INVALID })
}

fn no_measurement(out: &mut String, path: &Path, json: bool, tol: &Tolerances) -> Result<u8> {
    let e = load_ensemble_or_channel(path, tol)?;
    let report = check_no_measurement(&e, tol)?;
    if json {
        emit(out, &report);
    } else {
        say!(out, "candidate: {}", report.candidate_j);
        if report.tied_candidates.len() > 1 {
            let tied: Vec<String> = report.tied_candidates.iter().map(usize::to_string).collect();
            say!(out, "tied candidates: {}", tied.join(", "));
        }
        for m in &report.per_k_min_eigenvalue {
            say!(out, "  k={} min eigenvalue: {}", m.k, human(m.min_eigenvalue));
        }
        say!(out, "margin: {}", human(report.margin));
        say!(out, "prior condition: {}", report.prior_condition);
        say!(out, "span condition: {}", report.span_condition);
        if report.satisfied {
            say!(out, 
                "verdict: no measurement is optimal; always guess hypothesis {}",
                report.candidate_j
            );
        } else {
            say!(out, "verdict: some measurement beats guessing");
        }
    }
    Ok(if report.satisfied { exit::OK } else { exit::MEASUREMENT_HELPS })
}

#[derive(Serialize)]
struct CheckOptimalReport {
    error_probability: f64,
    optimality: OptimalityReport,
}

fn print_optimality(out: &mut String, r: &OptimalityReport) {
    say!(out, "hermiticity residual: {}", human(r.hermiticity_residual));
    for (k, (m, residual)) in r.per_k_min_eigenvalue.iter().zip(&r.per_k_eq4_residual).enumerate() {
        say!(out, "  k={k} min eigenvalue: {}  stationarity residual: {}", human(*m), human(*residual));
    }
    say!(out, "sufficient condition: {}", r.satisfied_sufficient);
    say!(out, "necessary condition: {}", r.satisfied_necessary);
}

fn check_optimal(out: &mut String, ensemble: &Path, pom: &Path, json: bool, tol: &Tolerances) -> Result<u8> {
    let e = load_ensemble_or_channel(ensemble, tol)?;
    let pom = load_pom(pom)?;
    let report = CheckOptimalReport {
        error_probability: error_probability(&pom, &e)?,
        optimality: check_min_error(&pom, &e, tol)?,
    };
    if json {
        emit(out, &report);
    } else {
        say!(out, "error probability: {}", human(report.error_probability));
        print_optimality(out, &report.optimality);
    }
    Ok(exit::OK)
}

fn threshold(out: &mut String, dim: u64, num_signals: u64) -> Result<u8> {
    let value = no_measurement_threshold(dim as usize, num_signals as usize)?;
    say!(out, "{dim}/{} = {}", dim + num_signals, human(value));
    Ok(exit::OK)
}

#[derive(Serialize)]
struct OptimizeReport {
    guess_baseline: f64,
    oracles: OracleCheck,
    result: SolverResult,
}

fn optimize(out: &mut String, path: &Path, cfg: &SolverConfig, pom_out: Option<&Path>, json: bool, tol: &Tolerances) -> Result<u8> {
    let e = load_ensemble_or_channel(path, tol)?;
    let result = optimize_min_error(&e, cfg, tol)?;
    let oracles = cross_check(&e, result.error_probability, tol)?;
    if oracles.flagged {
        let _ = writeln!(io::stderr(), "qdiscrim: warning: an independent oracle beats the iterative result by more than 1e-4");
    }
    if let Some(out) = pom_out {
        save_pom(&result.to_pom(), out)?;
    }
    let report = OptimizeReport {
        guess_baseline: 1.0 - e.max_prior(),
        oracles,
        result,
    };
    if json {
        emit(out, &report);
    } else {
        let r = &report.result;
        say!(out, "error probability: {}", human(r.error_probability));
        say!(out, "guess baseline: {}", human(report.guess_baseline));
        if let Some(h) = report.oracles.helstrom_error_probability {
            say!(out, "two-state closed form: {}", human(h));
        }
        if let Some(g) = report.oracles.projective_grid_error_probability {
            say!(out, "projective grid: {}", human(g));
        }
        say!(out, "oracle disagreement: {}", report.oracles.flagged);
        say!(out, 
            "iterations: {} ({})",
            r.iterations,
            if r.converged { "converged" } else { "not converged" }
        );
        print_optimality(out, &r.optimality);
    }
    Ok(exit::OK)
}

fn run_simulation(out: &mut String, path: &Path, strategy: &Strategy, trials: u64, seed: u64, json: bool, tol: &Tolerances) -> Result<u8> {
    let e = load_ensemble_or_channel(path, tol)?;
    let pom = load_strategy(strategy, &e)?;
    let r = simulate(&e, &pom, trials, seed)?;
    if json {
        emit(out, &r);
    } else {
        say!(out, "trials: {}", r.trials);
        say!(out, "errors: {}", r.strategy_errors);
        say!(out, "empirical error: {}", human(r.empirical_error));
        say!(out, "exact error: {}", human(r.expected_error));
        say!(out, "guess baseline: {}", human(r.guess_baseline));
        say!(out, "seed: {}", r.seed);
    }
    Ok(exit::OK)
}

#[derive(Serialize)]
struct InfoReport {
    mutual_information: f64,
    error_probability: f64,
    most_likely_given: Vec<Option<usize>>,
    prior_favourite_survives: bool,
    table: OutcomeTable,
}

fn info(out: &mut String, path: &Path, strategy: &Strategy, json: bool, tol: &Tolerances) -> Result<u8> {
    let e = load_ensemble_or_channel(path, tol)?;
    let pom = load_strategy(strategy, &e)?;
    if pom.len() != e.len() {
        return Err(Error::CountMismatch {
            what: "POM elements vs ensemble members",
            expected: e.len(),
            found: pom.len(),
        });
    }
    let table = outcome_table(&pom, &e)?;
    let report = InfoReport {
        mutual_information: mutual_information(&pom, &e)?,
        error_probability: error_probability(&pom, &e)?,
        most_likely_given: (0..e.len()).map(|k| table.most_likely_given(k)).collect(),
        prior_favourite_survives: table.remains_most_likely(e.argmax_prior(), tol.zero_tol),
        table,
    };
    if json {
        emit(out, &report);
    } else {
        say!(out, "mutual information: {}", human(report.mutual_information));
        say!(out, "error probability: {}", human(report.error_probability));
        say!(out, "outcome  P(k)  posterior P(j|k), j = 0..{}", e.len() - 1);
        for k in 0..e.len() {
            let column: Vec<String> = (0..e.len())
                .map(|j| report.table.posterior[j][k].map_or_else(|| "undefined".to_string(), human))
                .collect();
            say!(out, "{k}  {}  {}", human(report.table.p_marginal[k]), column.join(" "));
        }
        say!(out, 
            "a priori most likely hypothesis stays most likely: {}",
            report.prior_favourite_survives
        );
    }
    Ok(exit::OK)
}

fn trine(report: &mut String, p0: f64, out: &Path, spec_out: Option<&Path>, tol: &Tolerances) -> Result<u8> {
    let spec = trine_example(p0)?;
    let e = build_ensemble(&spec, tol)?;
    save_ensemble(&e, out)?;
    say!(report, "wrote ensemble {}", out.display());
    if let Some(path) = spec_out {
        save_channel_spec(&spec, path)?;
        say!(report, "wrote channel spec {}", path.display());
    }
    Ok(exit::OK)
}
