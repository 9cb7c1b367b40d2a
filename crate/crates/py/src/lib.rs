//! Python bindings: configure and run experiments, step a population game by
//! game, and inspect scenes and agents. Records and snapshots cross the
//! boundary as plain dicts with the same shape as the JSON files the CLI
//! writes.

use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use persim::arena::{self, ArenaConfig};
use persim::dialogue::Condition;
use persim::experiment::{self, ExperimentConfig};

fn to_py_err(e: persim::Error) -> PyErr {
    match e {
        persim::Error::Io { .. } | persim::Error::Csv { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Serialize through JSON and hand back the parsed Python object.
fn to_python<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Experiment settings. Every field of the JSON config is reachable through
/// `from_json`; the common ones are also keyword arguments and properties.
#[pyclass(name = "Config", module = "persim", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (condition = "A", population = 5, games = 5000, runs = 10, seed = 42))]
    fn new(condition: &str, population: usize, games: usize, runs: usize, seed: u64) -> PyResult<Self> {
        let condition: Condition = condition.parse().map_err(PyValueError::new_err)?;
        let inner = ExperimentConfig { condition, population, games, runs, seed, ..Default::default() };
        inner.validate().map_err(to_py_err)?;
        Ok(PyConfig { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: ExperimentConfig = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(to_py_err)?;
        Ok(PyConfig { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn condition(&self) -> String {
        self.inner.condition.to_string()
    }

    #[setter]
    fn set_condition(&mut self, value: &str) -> PyResult<()> {
        self.inner.condition = value.parse().map_err(PyValueError::new_err)?;
        Ok(())
    }

    #[getter]
    fn population(&self) -> usize {
        self.inner.population
    }

    #[setter]
    fn set_population(&mut self, value: usize) {
        self.inner.population = value;
    }

    #[getter]
    fn games(&self) -> usize {
        self.inner.games
    }

    #[setter]
    fn set_games(&mut self, value: usize) {
        self.inner.games = value;
    }

    #[getter]
    fn runs(&self) -> usize {
        self.inner.runs
    }

    #[setter]
    fn set_runs(&mut self, value: usize) {
        self.inner.runs = value;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, value: u64) {
        self.inner.seed = value;
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "Config(condition='{}', population={}, games={}, runs={}, seed={})",
            c.condition, c.population, c.games, c.runs, c.seed
        )
    }
}

/// A population playing one run, a game at a time.
#[pyclass(name = "Population", module = "persim")]
struct PyPopulation {
    inner: experiment::Population,
}

#[pymethods]
impl PyPopulation {
    #[new]
    #[pyo3(signature = (config, run = 0))]
    fn new(config: &PyConfig, run: u32) -> PyResult<Self> {
        Ok(PyPopulation { inner: experiment::Population::new(&config.inner, run).map_err(to_py_err)? })
    }

    /// Play `games` games and return their records.
    #[pyo3(signature = (games = 1))]
    fn play(&mut self, py: Python<'_>, games: usize) -> PyResult<Vec<Py<PyAny>>> {
        let mut out = Vec::with_capacity(games);
        for _ in 0..games {
            let record = self.inner.play_next().map_err(to_py_err)?;
            out.push(to_python(py, &record)?);
        }
        Ok(out)
    }

    #[getter]
    fn games_played(&self) -> usize {
        self.inner.games_played()
    }

    fn __len__(&self) -> usize {
        self.inner.agents().len()
    }

    /// One agent's lexicon (best first) and ontology.
    fn snapshot(&self, py: Python<'_>, agent: usize) -> PyResult<Py<PyAny>> {
        let agents = self.inner.agents();
        let agent = agents
            .get(agent)
            .ok_or_else(|| PyIndexError::new_err(format!("agent {agent} not found (population {})", agents.len())))?;
        to_python(py, &agent.snapshot())
    }
}

/// Run every run of `config` and return per-run records plus the terminal
/// averages over the last fifth of the games.
#[pyfunction]
fn run_experiment(py: Python<'_>, config: &PyConfig) -> PyResult<Py<PyAny>> {
    #[derive(Serialize)]
    struct Outcome {
        terminal: experiment::Terminal,
        mean_effort: f64,
        runs: Vec<Vec<persim::dialogue::GameRecord>>,
    }

    let inner = config.inner.clone();
    let outcome = py
        .detach(move || -> persim::Result<Outcome> {
            let results = experiment::run_experiment(&inner)?;
            let runs: Vec<_> = results.into_iter().map(|r| r.records).collect();
            let series = experiment::summarize(&runs, inner.success_window)?;
            Ok(Outcome { terminal: series.terminal(), mean_effort: experiment::mean_effort(&runs), runs })
        })
        .map_err(to_py_err)?;
    to_python(py, &outcome)
}

/// Sample one scene: two body poses and `events` ball movements, the last
/// being the topic.
#[pyfunction]
#[pyo3(signature = (seed, events = 2))]
fn setup_scene(py: Python<'_>, seed: u64, events: usize) -> PyResult<Py<PyAny>> {
    let mut rng = persim::seeded_rng(seed);
    let scene = arena::setup_scene(&mut rng, &ArenaConfig::default(), events, 0).map_err(to_py_err)?;
    to_python(py, &scene)
}

#[pymodule(name = "persim")]
fn persim_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyPopulation>()?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(setup_scene, m)?)?;
    Ok(())
}
