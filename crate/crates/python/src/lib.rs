//! Python bindings. Matrices cross the boundary as lists of rows; structured
//! results come back as plain dicts and lists.

use gldelta::evaluation::{evolution_diagnostics, graph_diff, Panel};
use gldelta::io::{edge_list_csv, BlockReport};
use gldelta::selection::{
    grid_search_with, information_criteria, stability_selection, Criterion, DfConvention,
    GridSpec, SelectionOptions, SelectionResult, StabilityOptions,
};
use gldelta::simulation::{
    generate_network, run_study, sample_gaussian, GroundTruthNetwork, ScenarioSpec, StudyOptions,
};
use gldelta::{BlockLayout, PenaltyConfig, PrecisionEstimate, SolverSettings, TimeCourseDataset};
use nalgebra::DMatrix;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;
use serde::Serialize;

create_exception!(pygldelta, GlDeltaError, PyException);
create_exception!(pygldelta, NotConvergedError, GlDeltaError);

fn err(e: gldelta::Error) -> PyErr {
    match e {
        gldelta::Error::NotConverged { .. } => NotConvergedError::new_err(e.to_string()),
        gldelta::Error::Io { .. } => pyo3::exceptions::PyOSError::new_err(e.to_string()),
        _ => GlDeltaError::new_err(e.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Convert any serializable value into Python objects through JSON.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| GlDeltaError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn settings(tol: f64, max_iter: usize, edge_threshold: f64) -> PyResult<SolverSettings> {
    let s = SolverSettings {
        tol,
        max_iter,
        edge_threshold,
        ..SolverSettings::default()
    };
    s.validate().map_err(err)?;
    Ok(s)
}

fn df_convention(name: &str) -> PyResult<DfConvention> {
    match name {
        "fused-groups" => Ok(DfConvention::FusedGroups),
        "entries" => Ok(DfConvention::Entries),
        _ => Err(PyValueError::new_err(format!(
            "df must be \"fused-groups\" or \"entries\", got {name:?}"
        ))),
    }
}

/// Block structure of a `genes × times` time course.
#[pyclass(name = "Layout", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLayout {
    inner: BlockLayout,
}

#[pymethods]
impl PyLayout {
    #[new]
    #[pyo3(signature = (genes, times, lag_cap=None))]
    fn new(genes: usize, times: usize, lag_cap: Option<usize>) -> PyResult<Self> {
        let lag_cap = lag_cap.unwrap_or(times.saturating_sub(1).min(1));
        Ok(Self {
            inner: BlockLayout::new(genes, times, lag_cap).map_err(err)?,
        })
    }

    #[getter]
    fn genes(&self) -> usize {
        self.inner.genes()
    }

    #[getter]
    fn times(&self) -> usize {
        self.inner.times()
    }

    #[getter]
    fn lag_cap(&self) -> usize {
        self.inner.lag_cap()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Matrix index of `gene` at `time`, both 0-based.
    fn index(&self, gene: usize, time: usize) -> PyResult<usize> {
        if gene >= self.inner.genes() || time >= self.inner.times() {
            return Err(PyValueError::new_err("gene or time out of range"));
        }
        Ok(self.inner.index(gene, time))
    }

    fn __repr__(&self) -> String {
        format!(
            "Layout(genes={}, times={}, lag_cap={})",
            self.inner.genes(),
            self.inner.times(),
            self.inner.lag_cap()
        )
    }
}

/// Replicates of a time course, one row per replicate in time-major order.
#[pyclass(name = "Dataset", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: TimeCourseDataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (values, genes, times, gene_names=None, time_labels=None))]
    fn new(
        values: Vec<Vec<f64>>,
        genes: usize,
        times: usize,
        gene_names: Option<Vec<String>>,
        time_labels: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let m = matrix(values)?;
        let inner = match (gene_names, time_labels) {
            (None, None) => TimeCourseDataset::unlabeled(m, genes, times),
            (g, t) => TimeCourseDataset::new(
                m,
                g.unwrap_or_else(|| (1..=genes).map(|i| format!("G{i}")).collect()),
                t.unwrap_or_else(|| (1..=times).map(|k| k.to_string()).collect()),
            ),
        }
        .map_err(err)?;
        if inner.genes() != genes || inner.times() != times {
            return Err(PyValueError::new_err("label counts disagree with genes and times"));
        }
        Ok(Self { inner })
    }

    /// Read a CSV whose header labels columns `GENE@TIME`.
    #[staticmethod]
    #[pyo3(signature = (path, genes, times, gene_order=None))]
    fn load_csv(
        path: &str,
        genes: usize,
        times: usize,
        gene_order: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let inner = TimeCourseDataset::load_csv_ordered(path, genes, times, gene_order.as_deref())
            .map_err(err)?;
        Ok(Self { inner })
    }

    fn save_csv(&self, path: &str) -> PyResult<()> {
        self.inner.save_csv(path).map_err(err)
    }

    fn standardize(&self) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.standardize().map_err(err)?,
        })
    }

    /// Empirical covariance with divisor `n`.
    fn covariance(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(self.inner.empirical_covariance().map_err(err)?.matrix()))
    }

    fn values(&self) -> Vec<Vec<f64>> {
        rows(self.inner.values())
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn gene_names(&self) -> Vec<String> {
        self.inner.gene_names().to_vec()
    }

    #[getter]
    fn time_labels(&self) -> Vec<String> {
        self.inner.time_labels().to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(n={}, genes={}, times={})",
            self.inner.n(),
            self.inner.genes(),
            self.inner.times()
        )
    }
}

/// A fitted precision matrix with the labels of its data.
#[pyclass(name = "Estimate", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEstimate {
    inner: PrecisionEstimate,
    gene_names: Vec<String>,
    time_labels: Vec<String>,
}

impl PyEstimate {
    fn new(inner: PrecisionEstimate, gene_names: &[String], time_labels: &[String]) -> Self {
        Self {
            inner,
            gene_names: gene_names.to_vec(),
            time_labels: time_labels.to_vec(),
        }
    }
}

#[pymethods]
impl PyEstimate {
    /// Rebuild an estimate from a `report.json` file.
    #[staticmethod]
    fn load_report(path: &str) -> PyResult<Self> {
        let report = BlockReport::load(path).map_err(err)?;
        let inner = report.to_estimate().map_err(err)?;
        Ok(Self::new(inner, &report.gene_names, &report.time_labels))
    }

    fn theta(&self) -> Vec<Vec<f64>> {
        rows(self.inner.theta())
    }

    #[getter]
    fn layout(&self) -> PyLayout {
        PyLayout {
            inner: *self.inner.layout(),
        }
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged()
    }

    #[getter]
    fn lambda1(&self) -> f64 {
        self.inner.config().lambda1
    }

    #[getter]
    fn lambda2(&self) -> f64 {
        self.inner.config().lambda2
    }

    fn diagnostics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, self.inner.diagnostics())
    }

    /// `(p, q, weight)` for every upper-triangular entry above the edge
    /// threshold, diagonal excluded.
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner
            .edge_set()
            .iter()
            .map(|e| (e.p, e.q, e.weight))
            .collect()
    }

    fn edge_list_csv(&self) -> String {
        edge_list_csv(&self.inner, &self.gene_names, &self.time_labels)
    }

    fn report_json(&self) -> PyResult<String> {
        BlockReport::from_estimate(&self.inner, &self.gene_names, &self.time_labels)
            .and_then(|r| r.to_json())
            .map_err(err)
    }

    fn save_report(&self, path: &str) -> PyResult<()> {
        BlockReport::from_estimate(&self.inner, &self.gene_names, &self.time_labels)
            .and_then(|r| r.save(path))
            .map_err(err)
    }

    /// Lag-0 networks at `time` and `time + 1` (0-based) and their changes.
    fn graph_diff<'py>(&self, py: Python<'py>, time: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &graph_diff(&self.inner, time).map_err(err)?)
    }

    /// One DOT panel: `graph_k`, `graph_k1`, `intersection` or `difference`.
    fn graph_diff_dot(&self, time: usize, panel: &str) -> PyResult<String> {
        let panel = Panel::ALL
            .into_iter()
            .find(|p| p.name() == panel)
            .ok_or_else(|| PyValueError::new_err(format!("unknown panel {panel:?}")))?;
        let r = graph_diff(&self.inner, time).map_err(err)?;
        Ok(r.to_dot(panel, &self.gene_names))
    }

    fn evolution<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &evolution_diagnostics(&self.inner))
    }

    /// `loglik`, `df`, `aic`, `aicc` and `bic` against a dataset.
    #[pyo3(signature = (data, df="fused-groups"))]
    fn information_criteria<'py>(
        &self,
        py: Python<'py>,
        data: &PyDataset,
        df: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let s = data.inner.empirical_covariance().map_err(err)?;
        let ic = information_criteria(&self.inner, &s, s.n_source(), df_convention(df)?)
            .map_err(err)?;
        to_py(py, &ic)
    }

    fn __repr__(&self) -> String {
        format!(
            "Estimate(dim={}, lambda1={}, lambda2={}, edges={}, converged={})",
            self.inner.layout().dim(),
            self.inner.config().lambda1,
            self.inner.config().lambda2,
            self.inner.edge_set().len(),
            if self.inner.converged() { "True" } else { "False" }
        )
    }
}

/// Fit one penalized model. The data are standardized first unless
/// `standardize` is false. Raises `NotConvergedError` if `require_converged`.
#[pyfunction]
#[pyo3(signature = (
    data, layout, lambda1, lambda2, standardize=true, penalize_diagonal=false,
    fuse_self_self=true, tol=1e-6, max_iter=10_000, edge_threshold=1e-4,
    require_converged=false
))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    data: &PyDataset,
    layout: &PyLayout,
    lambda1: f64,
    lambda2: f64,
    standardize: bool,
    penalize_diagonal: bool,
    fuse_self_self: bool,
    tol: f64,
    max_iter: usize,
    edge_threshold: f64,
    require_converged: bool,
) -> PyResult<PyEstimate> {
    let settings = settings(tol, max_iter, edge_threshold)?;
    let mut config = PenaltyConfig::new(&layout.inner, lambda1, lambda2).map_err(err)?;
    config.penalize_diagonal = penalize_diagonal;
    config.fuse_self_self = fuse_self_self;
    let d = &data.inner;
    let est = py
        .detach(|| {
            let d = if standardize { d.standardize()? } else { d.clone() };
            let s = d.empirical_covariance()?;
            let est = gldelta::solve(&s, &layout.inner, &config, &settings)?;
            if require_converged {
                est.require_converged()
            } else {
                Ok(est)
            }
        })
        .map_err(err)?;
    Ok(PyEstimate::new(est, d.gene_names(), d.time_labels()))
}

/// Scores of a grid search plus the estimates each criterion selected.
#[pyclass(name = "GridResult", frozen)]
struct PyGridResult {
    inner: SelectionResult,
    gene_names: Vec<String>,
    time_labels: Vec<String>,
}

#[pymethods]
impl PyGridResult {
    /// One dict per grid point, λ2-major with λ1 increasing.
    fn points<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.points)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    /// Index of the point selected by `criterion` (`aic`, `aicc`, `bic`).
    fn best_index(&self, criterion: &str) -> PyResult<Option<usize>> {
        let c: Criterion = criterion.parse().map_err(err)?;
        Ok(self.inner.best.get(&c).copied())
    }

    fn best_estimate(&self, criterion: &str) -> PyResult<Option<PyEstimate>> {
        let c: Criterion = criterion.parse().map_err(err)?;
        Ok(self
            .inner
            .best_estimate(c)
            .map(|e| PyEstimate::new(e.clone(), &self.gene_names, &self.time_labels)))
    }
}

/// Fit every `(λ1, λ2)` pair and select by AIC, AICc and BIC.
#[pyfunction]
#[pyo3(signature = (
    data, layout, lambda1, lambda2, standardize=true, df="fused-groups", tol=1e-6,
    max_iter=10_000, edge_threshold=1e-4
))]
#[allow(clippy::too_many_arguments)]
fn grid_search(
    py: Python<'_>,
    data: &PyDataset,
    layout: &PyLayout,
    lambda1: Vec<f64>,
    lambda2: Vec<f64>,
    standardize: bool,
    df: &str,
    tol: f64,
    max_iter: usize,
    edge_threshold: f64,
) -> PyResult<PyGridResult> {
    let settings = settings(tol, max_iter, edge_threshold)?;
    let grid = GridSpec::new(lambda1, lambda2).map_err(err)?;
    let options = SelectionOptions {
        df: df_convention(df)?,
        ..SelectionOptions::default()
    };
    let d = &data.inner;
    let inner = py
        .detach(|| {
            let d = if standardize { d.standardize()? } else { d.clone() };
            let s = d.empirical_covariance()?;
            let template = PenaltyConfig::new(&layout.inner, 0.0, 0.0)?;
            grid_search_with(&s, &layout.inner, &grid, &template, &settings, &options)
        })
        .map_err(err)?;
    Ok(PyGridResult {
        inner,
        gene_names: d.gene_names().to_vec(),
        time_labels: d.time_labels().to_vec(),
    })
}

/// Edge selection frequencies over random half-samples.
#[pyfunction]
#[pyo3(signature = (
    data, layout, lambda1, lambda2, subsamples=100, fraction=0.5, threshold=0.8, seed=0,
    standardize=true
))]
#[allow(clippy::too_many_arguments)]
fn stability<'py>(
    py: Python<'py>,
    data: &PyDataset,
    layout: &PyLayout,
    lambda1: f64,
    lambda2: f64,
    subsamples: usize,
    fraction: f64,
    threshold: f64,
    seed: u64,
    standardize: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let config = PenaltyConfig::new(&layout.inner, lambda1, lambda2).map_err(err)?;
    let options = StabilityOptions {
        subsamples,
        fraction,
        threshold,
        seed,
        standardize,
    };
    let r = py
        .detach(|| {
            stability_selection(&data.inner, &layout.inner, &config, &SolverSettings::default(), &options)
        })
        .map_err(err)?;
    to_py(py, &r)
}

#[allow(clippy::too_many_arguments)]
fn scenario(
    scenario: Option<usize>,
    genes: Option<usize>,
    times: Option<usize>,
    n: Option<usize>,
    m0: Option<usize>,
    births: Option<usize>,
    deaths: Option<usize>,
    pad: Option<usize>,
    seed: u64,
) -> PyResult<ScenarioSpec> {
    let mut spec = match scenario {
        Some(k) => ScenarioSpec::scenario(k).map_err(err)?,
        None => ScenarioSpec::default(),
    };
    spec.genes = genes.unwrap_or(spec.genes);
    spec.times = times.unwrap_or(spec.times);
    spec.n = n.unwrap_or(spec.n);
    spec.m0 = m0.unwrap_or(spec.m0);
    spec.births = births.unwrap_or(spec.births);
    spec.deaths = deaths.unwrap_or(spec.deaths);
    spec.independent_pad = pad.unwrap_or(spec.independent_pad);
    spec.seed = seed;
    spec.validate().map_err(err)?;
    Ok(spec)
}

/// A simulated network and a dataset drawn from it.
#[pyclass(name = "Simulation", frozen)]
struct PySimulation {
    network: GroundTruthNetwork,
    data: TimeCourseDataset,
}

#[pymethods]
impl PySimulation {
    fn theta(&self) -> Vec<Vec<f64>> {
        rows(&self.network.theta)
    }

    #[getter]
    fn data(&self) -> PyDataset {
        PyDataset {
            inner: self.data.clone(),
        }
    }

    #[getter]
    fn layout(&self) -> PyLayout {
        PyLayout {
            inner: self.network.layout,
        }
    }

    /// Lag-0 edge sets `(i, j)` of genes, one per time.
    fn supports(&self) -> Vec<Vec<(usize, usize)>> {
        self.network
            .supports
            .iter()
            .map(|s| s.iter().copied().collect())
            .collect()
    }

    fn truth<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.network)
    }
}

/// Draw a ground-truth network (study scenario 1 to 4, or the defaults)
/// and sample `n` replicates from it.
#[pyfunction]
#[pyo3(signature = (
    scenario=None, genes=None, times=None, n=None, m0=None, births=None, deaths=None,
    pad=None, seed=0, sample_seed=None
))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    scenario: Option<usize>,
    genes: Option<usize>,
    times: Option<usize>,
    n: Option<usize>,
    m0: Option<usize>,
    births: Option<usize>,
    deaths: Option<usize>,
    pad: Option<usize>,
    seed: u64,
    sample_seed: Option<u64>,
) -> PyResult<PySimulation> {
    let spec = self::scenario(scenario, genes, times, n, m0, births, deaths, pad, seed)?;
    let network = generate_network(&spec).map_err(err)?;
    let sample_seed = sample_seed.unwrap_or(gldelta::simulation::replicate_seeds(seed, 0).1);
    let data = sample_gaussian(&network, spec.n, sample_seed).map_err(err)?;
    Ok(PySimulation { network, data })
}

/// Repeated simulation study; returns the full report as a dict.
#[pyfunction]
#[pyo3(signature = (
    lambda1, lambda2, reps=20, scenario=None, genes=None, times=None, n=None, m0=None,
    births=None, deaths=None, pad=None, seed=0, label="study"
))]
#[allow(clippy::too_many_arguments)]
fn study<'py>(
    py: Python<'py>,
    lambda1: Vec<f64>,
    lambda2: Vec<f64>,
    reps: usize,
    scenario: Option<usize>,
    genes: Option<usize>,
    times: Option<usize>,
    n: Option<usize>,
    m0: Option<usize>,
    births: Option<usize>,
    deaths: Option<usize>,
    pad: Option<usize>,
    seed: u64,
    label: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = self::scenario(scenario, genes, times, n, m0, births, deaths, pad, seed)?;
    let grid = GridSpec::new(lambda1, lambda2).map_err(err)?;
    let report = py
        .detach(|| {
            run_study(label, &spec, reps, &grid, &SolverSettings::default(), &StudyOptions::default())
        })
        .map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
fn pygldelta(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("GlDeltaError", m.py().get_type::<GlDeltaError>())?;
    m.add("NotConvergedError", m.py().get_type::<NotConvergedError>())?;
    m.add_class::<PyLayout>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyEstimate>()?;
    m.add_class::<PyGridResult>()?;
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(grid_search, m)?)?;
    m.add_function(wrap_pyfunction!(stability, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(study, m)?)?;
    Ok(())
}
