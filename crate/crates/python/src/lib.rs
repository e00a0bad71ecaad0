//! Python bindings.
//!
//! Urns are passed as plain lists (`init`, `m`); exact probabilities come back
//! as `(numerator, denominator)` pairs of Python ints.

use num::{BigInt, BigRational};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use unfair_urn::exact::{
    self, Arithmetic, Compensated, DEFAULT_STATE_BUDGET, DEFAULT_TAIL_TOLERANCE,
};
use unfair_urn::mc::{self, ExperimentPlan, Horizon};
use unfair_urn::{stats, CriterionKind, DominanceCriterion, ReplacementRule, UrnError, UrnState};

fn to_py(e: UrnError) -> PyErr {
    if e.is_resource_limit() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn urn(init: &[u64], m: Vec<u64>) -> PyResult<(UrnState, ReplacementRule)> {
    let rule = ReplacementRule::new(m).map_err(to_py)?;
    let state = unfair_urn::new_urn(init, &rule).map_err(to_py)?;
    Ok((state, rule))
}

fn criterion(kind: &str, focus: usize) -> PyResult<DominanceCriterion> {
    let kind: CriterionKind = kind.parse().map_err(PyValueError::new_err)?;
    Ok(DominanceCriterion::with_focus(kind, focus))
}

fn fraction(p: &BigRational) -> (BigInt, BigInt) {
    (p.numer().clone(), p.denom().clone())
}

/// Monte Carlo estimate with its Wilson interval.
#[pyclass(name = "Estimate", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyEstimate {
    estimate: f64,
    lo: f64,
    hi: f64,
    confidence: f64,
    std_error: f64,
    successes: u64,
    replications: u64,
}

#[pymethods]
impl PyEstimate {
    fn covers(&self, value: f64) -> bool {
        self.lo <= value && value <= self.hi
    }

    fn __repr__(&self) -> String {
        format!(
            "Estimate({:.6} [{:.6}, {:.6}], {}/{})",
            self.estimate, self.lo, self.hi, self.successes, self.replications
        )
    }
}

impl From<mc::EstimateWithCI> for PyEstimate {
    fn from(e: mc::EstimateWithCI) -> Self {
        Self {
            estimate: e.estimate,
            lo: e.lo,
            hi: e.hi,
            confidence: e.confidence,
            std_error: e.std_error,
            successes: e.successes,
            replications: e.replications,
        }
    }
}

/// Draw colours and post-draw counts of one seeded trajectory.
#[pyfunction]
fn run_trajectory(
    init: Vec<u64>,
    m: Vec<u64>,
    steps: u64,
    seed: u64,
) -> PyResult<(Vec<usize>, Vec<Vec<u64>>)> {
    let (state, rule) = urn(&init, m)?;
    let t = unfair_urn::run_trajectory(&state, &rule, steps, &mut unfair_urn::seeded_rng(seed))
        .map_err(to_py)?;
    Ok((t.draws, t.states.into_iter().map(|s| s.counts).collect()))
}

/// First step at which the criterion fails along a fixed draw sequence, or None.
#[pyfunction]
#[pyo3(signature = (init, m, draws, criterion_kind = "pairwise", focus = 0))]
fn first_failure(
    init: Vec<u64>,
    m: Vec<u64>,
    draws: Vec<usize>,
    criterion_kind: &str,
    focus: usize,
) -> PyResult<Option<u64>> {
    let (state, rule) = urn(&init, m)?;
    if let Some(&bad) = draws.iter().find(|&&d| d >= rule.colours()) {
        return Err(PyValueError::new_err(format!("colour {bad} out of range")));
    }
    let t = unfair_urn::Trajectory::from_draws(state, draws, &rule);
    let check = unfair_urn::check_dominance_prefix(&t, &criterion(criterion_kind, focus)?)
        .map_err(to_py)?;
    Ok(check.first_failure)
}

/// States along `kb` black then `kw` white draws, and whether black led throughout.
#[pyfunction]
fn construct_proof_path(
    b0: u64,
    w0: u64,
    m: Vec<u64>,
    kb: u64,
    kw: u64,
) -> PyResult<(Vec<Vec<u64>>, bool)> {
    let rule = ReplacementRule::new(m).map_err(to_py)?;
    let p = unfair_urn::construct_proof_path(b0, w0, &rule, kb, kw).map_err(to_py)?;
    let states = p
        .trajectory
        .iter_states()
        .map(|s| s.counts.clone())
        .collect();
    Ok((states, p.positive_throughout))
}

#[pyfunction]
fn reachable_states(init: Vec<u64>, m: Vec<u64>, steps: u64) -> PyResult<Vec<Vec<u64>>> {
    let (state, rule) = urn(&init, m)?;
    Ok(exact::reachable_states(&state, &rule, steps)
        .into_iter()
        .collect())
}

type ExactEntry = (Vec<u64>, (BigInt, BigInt));

#[pyfunction]
#[pyo3(signature = (init, m, steps, budget = DEFAULT_STATE_BUDGET))]
fn state_distribution_exact(
    init: Vec<u64>,
    m: Vec<u64>,
    steps: u64,
    budget: u64,
) -> PyResult<Vec<ExactEntry>> {
    let (state, rule) = urn(&init, m)?;
    let d =
        exact::state_distribution::<BigRational>(&state, &rule, steps, budget).map_err(to_py)?;
    Ok(d.entries
        .iter()
        .map(|(k, p)| (k.clone(), fraction(p)))
        .collect())
}

#[pyfunction]
#[pyo3(signature = (init, m, steps, budget = DEFAULT_STATE_BUDGET))]
fn state_distribution(
    init: Vec<u64>,
    m: Vec<u64>,
    steps: u64,
    budget: u64,
) -> PyResult<Vec<(Vec<u64>, f64)>> {
    let (state, rule) = urn(&init, m)?;
    let d =
        exact::state_distribution::<Compensated>(&state, &rule, steps, budget).map_err(to_py)?;
    Ok(d.to_f64().into_iter().collect())
}

/// Exact survival curve `p_0..p_N` as floats; rational arithmetic when `arith`
/// resolves to exact for this horizon.
#[pyfunction]
#[pyo3(signature = (init, m, steps, criterion_kind = "pairwise", focus = 0, arith = "auto", budget = DEFAULT_STATE_BUDGET))]
fn survival_probability(
    init: Vec<u64>,
    m: Vec<u64>,
    steps: u64,
    criterion_kind: &str,
    focus: usize,
    arith: &str,
    budget: u64,
) -> PyResult<Vec<f64>> {
    let (state, rule) = urn(&init, m)?;
    let crit = criterion(criterion_kind, focus)?;
    let arith: Arithmetic = arith.parse().map_err(PyValueError::new_err)?;
    let values = if arith.is_exact_for(steps) {
        exact::survival_probability::<BigRational>(&state, &rule, steps, &crit, budget)
            .map_err(to_py)?
            .to_f64()
    } else {
        exact::survival_probability::<Compensated>(&state, &rule, steps, &crit, budget)
            .map_err(to_py)?
            .to_f64()
    };
    Ok(values)
}

#[pyfunction]
#[pyo3(signature = (init, m, steps, criterion_kind = "pairwise", focus = 0, budget = DEFAULT_STATE_BUDGET))]
fn survival_probability_exact(
    init: Vec<u64>,
    m: Vec<u64>,
    steps: u64,
    criterion_kind: &str,
    focus: usize,
    budget: u64,
) -> PyResult<Vec<(BigInt, BigInt)>> {
    let (state, rule) = urn(&init, m)?;
    let crit = criterion(criterion_kind, focus)?;
    let c = exact::survival_probability::<BigRational>(&state, &rule, steps, &crit, budget)
        .map_err(to_py)?;
    Ok(c.values.iter().map(fraction).collect())
}

#[pyfunction]
#[pyo3(signature = (b0, m, t, max_count, tail_tolerance = DEFAULT_TAIL_TOLERANCE))]
fn birth_process_distribution(
    b0: u64,
    m: u64,
    t: f64,
    max_count: u64,
    tail_tolerance: f64,
) -> PyResult<(Vec<u64>, Vec<f64>, f64)> {
    let d =
        exact::birth_process_distribution(b0, m, t, max_count, tail_tolerance).map_err(to_py)?;
    Ok((d.support, d.probabilities, d.tail_mass))
}

fn plan(
    init: &[u64],
    m: Vec<u64>,
    horizon: Horizon,
    reps: u64,
    seed: u64,
) -> PyResult<ExperimentPlan> {
    let rule = ReplacementRule::new(m).map_err(to_py)?;
    ExperimentPlan::new(init, rule, horizon, reps, seed).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (init, m, steps, reps, seed = 0, criterion_kind = "pairwise", focus = 0, confidence = 0.95))]
#[allow(clippy::too_many_arguments)]
fn estimate_dominance(
    py: Python<'_>,
    init: Vec<u64>,
    m: Vec<u64>,
    steps: u64,
    reps: u64,
    seed: u64,
    criterion_kind: &str,
    focus: usize,
    confidence: f64,
) -> PyResult<PyEstimate> {
    let p = plan(&init, m, Horizon::Steps(steps), reps, seed)?
        .with_criterion(criterion(criterion_kind, focus)?)
        .with_confidence(confidence);
    let e = py.detach(|| mc::estimate_dominance(&p)).map_err(to_py)?;
    Ok(e.into())
}

/// `(N, Estimate)` for each grid point, from one set of replications run to `steps`.
#[pyfunction]
#[pyo3(signature = (init, m, steps, grid, reps, seed = 0, criterion_kind = "pairwise", focus = 0))]
#[allow(clippy::too_many_arguments)]
fn survival_curve_mc(
    py: Python<'_>,
    init: Vec<u64>,
    m: Vec<u64>,
    steps: u64,
    grid: Vec<u64>,
    reps: u64,
    seed: u64,
    criterion_kind: &str,
    focus: usize,
) -> PyResult<Vec<(u64, PyEstimate)>> {
    let p = plan(&init, m, Horizon::Steps(steps), reps, seed)?
        .with_criterion(criterion(criterion_kind, focus)?);
    let curve = py
        .detach(|| mc::survival_curve_mc(&p, &grid))
        .map_err(to_py)?;
    Ok(curve
        .into_iter()
        .map(|pt| (pt.steps, pt.estimate.into()))
        .collect())
}

/// `W_N / B_N` per replication.
#[pyfunction]
#[pyo3(signature = (init, m, steps, reps, seed = 0))]
fn ratio_samples(
    py: Python<'_>,
    init: Vec<u64>,
    m: Vec<u64>,
    steps: u64,
    reps: u64,
    seed: u64,
) -> PyResult<Vec<f64>> {
    let p = plan(&init, m, Horizon::Steps(steps), reps, seed)?;
    py.detach(|| mc::ratio_samples(&p)).map_err(to_py)
}

/// Per-replication `exp(-m_i t) X_i(t)` at time `tmax`.
#[pyfunction]
#[pyo3(signature = (init, m, tmax, reps, seed = 0))]
fn sample_scaled_limits(
    py: Python<'_>,
    init: Vec<u64>,
    m: Vec<u64>,
    tmax: f64,
    reps: u64,
    seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let p = plan(&init, m, Horizon::Time(tmax), reps, seed)?;
    let s = py.detach(|| mc::sample_scaled_limits(&p)).map_err(to_py)?;
    Ok(s.samples.into_iter().map(|x| x.values).collect())
}

#[pyfunction]
fn derive_replication_seed(master_seed: u64, index: u64) -> u64 {
    mc::derive_replication_seed(master_seed, index)
}

#[pyfunction]
#[pyo3(signature = (successes, trials, confidence = 0.95))]
fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> PyResult<(f64, f64)> {
    stats::wilson_interval(successes, trials, confidence).map_err(to_py)
}

/// Pearson statistic, degrees of freedom, threshold and decision.
#[pyfunction]
#[pyo3(signature = (observed, expected, significance = stats::ACCEPTANCE_SIGNIFICANCE))]
fn chi_square_gof(
    observed: Vec<u64>,
    expected: Vec<f64>,
    significance: f64,
) -> PyResult<(f64, usize, f64, bool)> {
    let r = stats::chi_square_gof(&observed, &expected, significance).map_err(to_py)?;
    Ok((r.statistic, r.size, r.threshold, r.passed))
}

#[pymodule]
#[pyo3(name = "unfair_urn")]
fn unfair_urn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEstimate>()?;
    m.add_function(wrap_pyfunction!(run_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(first_failure, m)?)?;
    m.add_function(wrap_pyfunction!(construct_proof_path, m)?)?;
    m.add_function(wrap_pyfunction!(reachable_states, m)?)?;
    m.add_function(wrap_pyfunction!(state_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(state_distribution_exact, m)?)?;
    m.add_function(wrap_pyfunction!(survival_probability, m)?)?;
    m.add_function(wrap_pyfunction!(survival_probability_exact, m)?)?;
    m.add_function(wrap_pyfunction!(birth_process_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_dominance, m)?)?;
    m.add_function(wrap_pyfunction!(survival_curve_mc, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_samples, m)?)?;
    m.add_function(wrap_pyfunction!(sample_scaled_limits, m)?)?;
    m.add_function(wrap_pyfunction!(derive_replication_seed, m)?)?;
    m.add_function(wrap_pyfunction!(wilson_interval, m)?)?;
    m.add_function(wrap_pyfunction!(chi_square_gof, m)?)?;
    Ok(())
}
