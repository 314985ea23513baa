//! Python bindings: configuration, workloads, simulation and single-instance
//! solving.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mqa_core::harness::{self, InstanceMetrics, ReportFormat};
use mqa_core::instance::{exact_pair, Instance};
use mqa_core::solvers::{self, BbOptions, SolveParams, SolverKind};
use mqa_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Workload { .. } | Error::InvalidSubproblemCount(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Simulation parameters. Population sizes default to the full-scale values
/// times `scale`.
#[pyclass(name = "SimConfig", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: mqa_core::SimConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (*, scale = 0.01, budget = None, unit_price = None, instances = None, workers = None, tasks = None, window = None, gamma = None, delta = None, seed = None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        scale: f64,
        budget: Option<f64>,
        unit_price: Option<f64>,
        instances: Option<usize>,
        workers: Option<usize>,
        tasks: Option<usize>,
        window: Option<usize>,
        gamma: Option<usize>,
        delta: Option<f64>,
        seed: Option<u64>,
    ) -> PyResult<Self> {
        let mut c = mqa_core::SimConfig::default().scaled(scale);
        c.budget = budget.unwrap_or(c.budget);
        c.unit_price = unit_price.unwrap_or(c.unit_price);
        c.instances = instances.unwrap_or(c.instances);
        c.workers = workers.unwrap_or(c.workers);
        c.tasks = tasks.unwrap_or(c.tasks);
        c.window = window.unwrap_or(c.window);
        c.gamma = gamma.unwrap_or(c.gamma);
        c.delta = delta.unwrap_or(c.delta);
        c.seed = seed.unwrap_or(c.seed);
        c.validate().map_err(py_err)?;
        Ok(Self { inner: c })
    }

    #[getter]
    fn budget(&self) -> f64 {
        self.inner.budget
    }
    #[getter]
    fn instances(&self) -> usize {
        self.inner.instances
    }
    #[getter]
    fn workers(&self) -> usize {
        self.inner.workers
    }
    #[getter]
    fn tasks(&self) -> usize {
        self.inner.tasks
    }
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "SimConfig(budget={}, unit_price={}, instances={}, workers={}, tasks={}, window={}, gamma={}, seed={})",
            c.budget, c.unit_price, c.instances, c.workers, c.tasks, c.window, c.gamma, c.seed
        )
    }
}

/// Arrivals per time instance, optionally with a fixed pair table.
#[pyclass(name = "Workload", from_py_object)]
#[derive(Clone)]
struct PyWorkload {
    inner: harness::ArrivalStream,
}

#[pymethods]
impl PyWorkload {
    #[staticmethod]
    #[pyo3(signature = (config, seed = None))]
    fn synthetic(config: &PyConfig, seed: Option<u64>) -> PyResult<Self> {
        let seed = seed.unwrap_or(config.inner.seed);
        let inner = harness::generate_synthetic(&config.inner, seed).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Parses the JSON-lines workload format.
    #[staticmethod]
    #[pyo3(signature = (text, config, min_instances = 1))]
    fn from_jsonl(text: &str, config: &PyConfig, min_instances: usize) -> PyResult<Self> {
        let inner = harness::read_workload(text.as_bytes(), &config.inner, min_instances).map_err(py_err)?;
        Ok(Self { inner })
    }

    fn to_jsonl(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        harness::write_workload(&self.inner, &mut buf).map_err(py_err)?;
        Ok(String::from_utf8(buf).expect("json is utf-8"))
    }

    #[getter]
    fn num_workers(&self) -> usize {
        self.inner.num_workers()
    }
    #[getter]
    fn num_tasks(&self) -> usize {
        self.inner.num_tasks()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Per-instance results of a simulation.
#[pyclass(name = "Report")]
struct PyReport {
    metrics: Vec<InstanceMetrics>,
    #[pyo3(get)]
    predicted_entities: usize,
    #[pyo3(get)]
    skipped_rounds: usize,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn total_quality(&self) -> f64 {
        self.metrics.iter().map(|m| m.quality).sum()
    }

    /// `(instance, quality, cost, n_assigned)` per instance.
    fn rows(&self) -> Vec<(usize, f64, f64, usize)> {
        self.metrics.iter().map(|m| (m.instance, m.quality, m.cost, m.n_assigned)).collect()
    }

    fn to_csv(&self) -> PyResult<String> {
        harness::render_report(&self.metrics, ReportFormat::Csv).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        harness::render_report(&self.metrics, ReportFormat::Json).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.metrics.len()
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(text: &str) -> PyResult<T> {
    text.parse().map_err(py_err)
}

/// Runs the multi-instance simulation.
#[pyfunction]
#[pyo3(signature = (workload, config, solver = "greedy", prediction = "on", adaptive = "off", timing = false))]
fn simulate(workload: &PyWorkload, config: &PyConfig, solver: &str, prediction: &str, adaptive: &str, timing: bool) -> PyResult<PyReport> {
    let opts = harness::SimOptions {
        prediction: parse(prediction)?,
        adaptive: parse(adaptive)?,
        pruning: true,
        timing,
    };
    let run = harness::run_simulation(&workload.inner, parse(solver)?, &config.inner, &opts).map_err(py_err)?;
    Ok(PyReport {
        metrics: run.metrics,
        predicted_entities: run.predicted_entities,
        skipped_rounds: run.skipped_rounds,
    })
}

type Solved = (Vec<(u32, u32)>, f64, f64);

/// Solves one instance given as `(worker, task, cost, quality)` tuples.
/// Returns the chosen `(worker, task)` pairs, total quality and total cost.
#[pyfunction]
#[pyo3(signature = (pairs, budget, solver = "greedy", seed = 0))]
fn solve(pairs: Vec<(u32, u32, f64, f64)>, budget: f64, solver: &str, seed: u64) -> PyResult<Solved> {
    let candidates = pairs.into_iter().map(|(w, t, c, q)| exact_pair(w, t, c, q)).collect();
    let inst = Instance::from_pairs(0.0, vec![], vec![], candidates);
    let params = SolveParams::new(budget);
    let outcome = match solver {
        "oracle" => solvers::brute_force_oracle(&inst, budget).map_err(py_err)?,
        other => match parse::<SolverKind>(other)? {
            SolverKind::Greedy => solvers::solve_greedy(&inst, &params),
            SolverKind::Dnc => solvers::solve_dnc(&inst, &params),
            SolverKind::Bb => solvers::solve_bb(&inst, budget, &BbOptions::default()).map_err(py_err)?,
            SolverKind::Random => solvers::solve_random(&inst, &params, &mut ChaCha8Rng::seed_from_u64(seed)),
        },
    };
    let ids = outcome.assignment.pair_ids().into_iter().map(|(w, t)| (w.0, t.0)).collect();
    Ok((ids, outcome.total_quality, outcome.total_cost))
}

/// Grid forecast errors `(instance, workers, tasks)` for one window size.
#[pyfunction]
fn prediction_errors(workload: &PyWorkload, gamma: usize, window: usize) -> PyResult<Vec<(usize, f64, f64)>> {
    if gamma == 0 || window == 0 {
        return Err(PyValueError::new_err("gamma and window must be positive"));
    }
    Ok(harness::prediction_errors(&workload.inner, gamma, window)
        .into_iter()
        .map(|e| (e.instance, e.rel_err_workers, e.rel_err_tasks))
        .collect())
}

/// Subproblem count minimising the divide-and-conquer cost model.
#[pyfunction]
fn best_g(m: usize, n: usize, deg: f64) -> usize {
    solvers::best_g(m, n, deg)
}

#[pymodule]
fn mqa(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyWorkload>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(prediction_errors, m)?)?;
    m.add_function(wrap_pyfunction!(best_g, m)?)?;
    Ok(())
}
