//! Python bindings for `rulesched`.
//!
//! Rule strings and schedules cross the boundary as plain `list[int]`; every
//! randomized call takes an explicit integer seed so results are reproducible
//! from Python.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rulesched::boa::{self, BoaConfig, RunReport};
use rulesched::construction::{self, RuleString};
use rulesched::harness::{self, Algorithm, ExperimentConfig, Outcome};
use rulesched::lcs::{self, HcConfig};
use rulesched::problem::{self, GenConfig, GenMode, Schedule, DEFAULT_COMBO_BUDGET};
use rulesched::rng::stream;
use rulesched::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn rules(v: &[usize]) -> PyResult<RuleString> {
    RuleString::from_indices(v).map_err(to_py)
}

#[pyclass(name = "Fitness", frozen, eq, get_all, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyFitness {
    total: f64,
    preference_cost: f64,
    undercover_units: u64,
}

#[pymethods]
impl PyFitness {
    fn __repr__(&self) -> String {
        format!(
            "Fitness(total={}, preference_cost={}, undercover_units={})",
            self.total, self.preference_cost, self.undercover_units
        )
    }
}

impl From<problem::Fitness> for PyFitness {
    fn from(f: problem::Fitness) -> Self {
        Self {
            total: f.total,
            preference_cost: f.preference_cost,
            undercover_units: f.undercover_units,
        }
    }
}

#[pyclass(name = "Instance", frozen, skip_from_py_object)]
struct PyInstance {
    inner: problem::Instance,
}

#[pymethods]
impl PyInstance {
    /// Parses an instance document.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        problem::parse_instance(text).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn from_path(path: &str) -> PyResult<Self> {
        problem::Instance::from_path(path).map(|inner| Self { inner }).map_err(to_py)
    }

    /// Generates a synthetic instance; `mode` is "random" or "planted".
    #[staticmethod]
    #[pyo3(signature = (nurses, mode = "random", seed = 0, days = 7, shifts_per_day = 2, patterns_per_nurse = 4, cost_max = 10))]
    fn generate(
        nurses: usize,
        mode: &str,
        seed: u64,
        days: usize,
        shifts_per_day: usize,
        patterns_per_nurse: usize,
        cost_max: u32,
    ) -> PyResult<Self> {
        let mode: GenMode = mode.parse().map_err(to_py)?;
        let config = GenConfig {
            nurses,
            days,
            shifts_per_day,
            patterns_per_nurse,
            cost_max,
            mode,
            seed,
        };
        problem::generate_instance(&config).map(|inner| Self { inner }).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn nurse_count(&self) -> usize {
        self.inner.nurse_count()
    }

    #[getter]
    fn days(&self) -> usize {
        self.inner.days()
    }

    #[getter]
    fn shifts_per_day(&self) -> usize {
        self.inner.shifts_per_day()
    }

    #[getter]
    fn demand(&self) -> Vec<Vec<u32>> {
        self.inner.demand_matrix()
    }

    fn evaluate(&self, schedule: Vec<usize>) -> PyResult<PyFitness> {
        problem::evaluate(&self.inner, &Schedule(schedule))
            .map(Into::into)
            .map_err(to_py)
    }

    /// Exhaustive optimum: `(schedule, fitness)`.
    #[pyo3(signature = (budget = DEFAULT_COMBO_BUDGET))]
    fn enumerate_optimum(&self, py: Python<'_>, budget: u64) -> PyResult<(Vec<usize>, PyFitness)> {
        let inner = &self.inner;
        py.detach(|| problem::enumerate_optimum(inner, budget))
            .map(|(s, f)| (s.0, f.into()))
            .map_err(to_py)
    }

    /// Decodes a rule string with a stream seeded by `seed`.
    #[pyo3(signature = (rule_string, seed = 0))]
    fn decode(&self, rule_string: Vec<usize>, seed: u64) -> PyResult<(Vec<usize>, PyFitness)> {
        construction::decode(&self.inner, &rules(&rule_string)?, &mut stream(seed))
            .map(|(s, f)| (s.0, f.into()))
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(nurses={}, days={}, shifts_per_day={})",
            self.inner.nurse_count(),
            self.inner.days(),
            self.inner.shifts_per_day()
        )
    }
}

#[pyclass(name = "BoaModel", frozen, skip_from_py_object)]
struct PyBoaModel {
    inner: boa::BoaModel,
}

#[pymethods]
impl PyBoaModel {
    /// Fits the chain model to `elite` by counting.
    #[staticmethod]
    #[pyo3(signature = (elite, n_steps, k = construction::RULE_COUNT, alpha = 1.0))]
    fn learn(elite: Vec<Vec<usize>>, n_steps: usize, k: usize, alpha: f64) -> PyResult<Self> {
        let elite = elite.iter().map(|x| rules(x)).collect::<PyResult<Vec<_>>>()?;
        boa::learn_cpts(&elite, n_steps, k, alpha)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (n_steps, k = construction::RULE_COUNT))]
    fn uniform(n_steps: usize, k: usize) -> Self {
        Self {
            inner: boa::BoaModel::uniform(n_steps, k),
        }
    }

    #[getter]
    fn marginal(&self) -> Vec<f64> {
        self.inner.marginal().to_vec()
    }

    fn transition(&self, step: usize, prev: usize) -> PyResult<Vec<f64>> {
        if step == 0 || step >= self.inner.n_steps() || prev >= self.inner.k() {
            return Err(PyValueError::new_err("step must be in 1..n_steps and prev in 0..k"));
        }
        Ok(self.inner.transition(step, prev).to_vec())
    }

    #[pyo3(signature = (count = 1, seed = 0))]
    fn sample(&self, count: usize, seed: u64) -> Vec<Vec<usize>> {
        let mut rng = stream(seed);
        (0..count).map(|_| self.inner.sample(&mut rng).indices()).collect()
    }
}

#[pyclass(name = "StrengthTable", skip_from_py_object)]
struct PyStrengthTable {
    inner: lcs::StrengthTable,
}

#[pymethods]
impl PyStrengthTable {
    #[new]
    #[pyo3(signature = (n_steps, initial = lcs::DEFAULT_INITIAL_STRENGTH, cap = lcs::DEFAULT_STRENGTH_CAP))]
    fn new(n_steps: usize, initial: f64, cap: f64) -> PyResult<Self> {
        lcs::StrengthTable::new(n_steps, construction::RULE_COUNT, initial, cap)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    fn row(&self, step: usize) -> PyResult<Vec<f64>> {
        if step >= self.inner.n_steps() {
            return Err(PyValueError::new_err("step out of range"));
        }
        Ok(self.inner.row(step).to_vec())
    }

    fn reinforce(&mut self, used: Vec<usize>, delta: f64) -> PyResult<()> {
        self.inner.reinforce(&rules(&used)?, delta).map_err(to_py)
    }

    fn dump(&self) -> String {
        self.inner.dump()
    }

    /// Hill-climbs from `start`, updating this table in place. Returns
    /// `(rule_string, fitness)`.
    #[pyo3(signature = (instance, start, iterations = 50, delta = 0.1, seed = 0))]
    fn hill_climb(
        &mut self,
        instance: &PyInstance,
        start: Vec<usize>,
        iterations: usize,
        delta: f64,
        seed: u64,
    ) -> PyResult<(Vec<usize>, PyFitness)> {
        let config = HcConfig { iterations, delta };
        lcs::hill_climb(&instance.inner, &rules(&start)?, &mut self.inner, &config, &mut stream(seed))
            .map(|o| (o.best.rules.indices(), o.best.fitness.into()))
            .map_err(to_py)
    }
}

/// Index drawn with probability proportional to `weights`.
#[pyfunction]
#[pyo3(signature = (weights, seed = 0))]
fn roulette(weights: Vec<f64>, seed: u64) -> PyResult<usize> {
    lcs::roulette(&weights, &mut stream(seed)).map_err(to_py)
}

fn records<'py>(py: Python<'py>, records: &[boa::GenerationRecord]) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("generation", records.iter().map(|r| r.generation).collect::<Vec<_>>())?;
    d.set_item("best_fitness", records.iter().map(|r| r.best_fitness).collect::<Vec<_>>())?;
    d.set_item("mean_fitness", records.iter().map(|r| r.mean_fitness).collect::<Vec<_>>())?;
    d.set_item("evaluations", records.iter().map(|r| r.evaluations).collect::<Vec<_>>())?;
    Ok(d)
}

fn best<'py>(py: Python<'py>, ind: &boa::Individual) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("rule_string", ind.genotype.indices())?;
    d.set_item("schedule", ind.schedule.0.clone())?;
    d.set_item("fitness", PyFitness::from(ind.fitness))?;
    d.set_item("decode_seed", ind.decode_seed)?;
    Ok(d)
}

fn outcome_dict<'py>(py: Python<'py>, o: &Outcome) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("algorithm", o.algorithm.to_string())?;
    d.set_item("seed", o.seed)?;
    d.set_item("records", records(py, &o.records)?)?;
    d.set_item("best", best(py, &o.best)?)?;
    d.set_item("evaluations", o.evaluations())?;
    Ok(d)
}

fn report_dict<'py>(py: Python<'py>, r: &RunReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("seed", r.seed)?;
    d.set_item("records", records(py, &r.records)?)?;
    d.set_item("best", best(py, &r.best)?)?;
    d.set_item("evaluations", r.evaluations())?;
    d.set_item(
        "stop_reason",
        serde_json::to_value(r.stop_reason)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned)),
    )?;
    Ok(d)
}

/// Runs the model-building loop. Keyword arguments override the defaults.
#[pyfunction]
#[pyo3(signature = (instance, seed = 0, lcs = false, budget = None, population_size = 100, elite_fraction = 0.5, offspring_count = None, smoothing = 1.0, max_generations = 200, stagnation_limit = 50))]
#[allow(clippy::too_many_arguments)]
fn evolve<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    seed: u64,
    lcs: bool,
    budget: Option<u64>,
    population_size: usize,
    elite_fraction: f64,
    offspring_count: Option<usize>,
    smoothing: f64,
    max_generations: u32,
    stagnation_limit: u32,
) -> PyResult<Bound<'py, PyDict>> {
    let config = BoaConfig {
        population_size,
        elite_fraction,
        offspring_count,
        smoothing,
        max_generations,
        stagnation_limit,
        max_evaluations: budget,
        lcs_enabled: lcs,
        seed,
        ..BoaConfig::default()
    };
    let inner = &instance.inner;
    let report = py.detach(|| boa::evolve(inner, &config)).map_err(to_py)?;
    report_dict(py, &report)
}

/// Runs one algorithm (`boa`, `boa+lcs`, `random`, `fixed:<rule>`).
#[pyfunction]
#[pyo3(signature = (instance, algorithm, seed = 0, budget = None))]
fn solve<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    algorithm: &str,
    seed: u64,
    budget: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let algorithm: Algorithm = algorithm.parse().map_err(to_py)?;
    let inner = &instance.inner;
    let outcome = py
        .detach(|| harness::solve(inner, algorithm, seed, budget, &BoaConfig::default()))
        .map_err(to_py)?;
    outcome_dict(py, &outcome)
}

/// Runs a comparison described by a JSON experiment configuration and
/// returns the rows as dictionaries.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config_json: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let config: ExperimentConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let rows = py.detach(|| harness::run_experiment(&config)).map_err(to_py)?;
    rows.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("instance", &r.instance)?;
            d.set_item("algorithm", &r.algorithm)?;
            d.set_item("seed", r.seed)?;
            d.set_item("best_fitness", r.best_fitness)?;
            d.set_item("evaluations", r.evaluations)?;
            d.set_item("wall_time_ms", r.wall_time_ms)?;
            Ok(d)
        })
        .collect()
}

#[pymodule(name = "rulesched")]
fn rulesched_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RULE_COUNT", construction::RULE_COUNT)?;
    m.add(
        "RULE_NAMES",
        construction::RuleId::ALL.iter().map(|r| r.name()).collect::<Vec<_>>(),
    )?;
    m.add_class::<PyFitness>()?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PyBoaModel>()?;
    m.add_class::<PyStrengthTable>()?;
    m.add_function(wrap_pyfunction!(roulette, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_strings_are_range_checked() {
        assert_eq!(rules(&[0, 3]).unwrap().indices(), vec![0, 3]);
        assert!(rules(&[4]).is_err());
    }
}
