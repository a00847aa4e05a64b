//! Python bindings: configurations, meshes, single-mesh solves with their
//! indicators, and the full adaptive loop.

use boussinesq::adaptivity::{self, adapt_loop, AdaptOutcome, ConvergenceRecord};
use boussinesq::assembly::Spaces;
use boussinesq::config::ProblemConfig;
use boussinesq::estimator::{compute_indicators, Indicators};
use boussinesq::fem::point_evaluate;
use boussinesq::io;
use boussinesq::solver::{picard_solve, SolutionState};
use boussinesq::{Domain, Error, Mesh, Point2};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList, PyTuple};

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Io { .. } => PyOSError::new_err(msg),
        Error::Singular { .. } | Error::InaccurateSolve { .. } => PyRuntimeError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

/// Renders a Python value in the configuration file syntax; sequences
/// become comma-separated lists.
fn config_value(value: &Bound<'_, PyAny>) -> PyResult<String> {
    if value.is_none() {
        return Ok("default".into());
    }
    if value.is_instance_of::<PyTuple>() || value.is_instance_of::<PyList>() {
        let parts: Vec<String> = value.try_iter()?.map(|v| v?.str().map(|s| s.to_string())).collect::<PyResult<_>>()?;
        return Ok(parts.join(","));
    }
    Ok(value.str()?.to_string())
}

#[pyclass(name = "Config", module = "boussinesq_py", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: ProblemConfig,
}

#[pymethods]
impl PyConfig {
    /// Defaults overridden by keyword arguments, e.g.
    /// `Config(domain="lshape", alpha=1.5, z=(0.5, 0.5))`.
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut inner = ProblemConfig::default();
        if let Some(kwargs) = kwargs {
            for (k, v) in kwargs.iter() {
                inner.set(&k.extract::<String>()?, &config_value(&v)?).map_err(to_py)?;
            }
        }
        Ok(PyConfig { inner })
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(PyConfig { inner: ProblemConfig::from_file(&path).map_err(to_py)? })
    }

    fn set(&mut self, key: &str, value: &Bound<'_, PyAny>) -> PyResult<()> {
        self.inner.set(key, &config_value(value)?).map_err(to_py)
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_py)
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn domain(&self) -> String {
        self.inner.domain.to_string()
    }

    #[getter]
    fn element(&self) -> String {
        self.inner.element_family.to_string()
    }

    #[getter]
    fn adapt_max(&self) -> usize {
        self.inner.adapt_max
    }

    #[getter]
    fn z(&self) -> (f64, f64) {
        (self.inner.z.x, self.inner.z.y)
    }

    /// Every setting as strings, in the configuration file syntax.
    fn to_dict(&self) -> Vec<(String, String)> {
        self.inner
            .to_config_string()
            .lines()
            .filter_map(|l| l.split_once(" = ").map(|(k, v)| (k.to_string(), v.to_string())))
            .collect()
    }

    fn __str__(&self) -> String {
        self.inner.to_config_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(domain={}, alpha={}, element={})",
            self.inner.domain, self.inner.alpha, self.inner.element_family
        )
    }
}

#[pyclass(name = "Mesh", module = "boussinesq_py", from_py_object)]
#[derive(Clone)]
struct PyMesh {
    inner: Mesh,
}

#[pymethods]
impl PyMesh {
    /// Uniform initial mesh; `n` subdivisions per unit length, or the
    /// benchmark mesh of the domain when omitted.
    #[staticmethod]
    #[pyo3(signature = (domain, n = None))]
    fn initial(domain: &str, n: Option<usize>) -> PyResult<Self> {
        let d: Domain = domain.parse().map_err(to_py)?;
        let inner = Mesh::initial(d, n.unwrap_or_else(|| d.default_resolution())).map_err(to_py)?;
        Ok(PyMesh { inner })
    }

    #[getter]
    fn n_elements(&self) -> usize {
        self.inner.n_elements()
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.inner.n_vertices()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.n_edges()
    }

    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.vertices().iter().map(|p| (p.x, p.y)).collect()
    }

    fn elements(&self) -> Vec<[usize; 3]> {
        self.inner.elements().to_vec()
    }

    fn diameters(&self) -> Vec<f64> {
        (0..self.inner.n_elements()).map(|k| self.inner.diameter(k)).collect()
    }

    fn total_area(&self) -> f64 {
        self.inner.total_area()
    }

    fn min_area(&self) -> f64 {
        self.inner.min_area()
    }

    fn min_angle(&self) -> f64 {
        self.inner.min_angle()
    }

    /// Elements whose closure contains the point.
    fn locate(&self, x: f64, y: f64) -> Vec<usize> {
        self.inner.locate(Point2::new(x, y))
    }

    /// Longest-edge bisection of the marked elements plus conforming closure.
    fn bisect(&self, marked: Vec<usize>) -> PyResult<Self> {
        if let Some(&k) = marked.iter().find(|&&k| k >= self.inner.n_elements()) {
            return Err(PyValueError::new_err(format!("element {k} out of range")));
        }
        Ok(PyMesh { inner: self.inner.bisect(&marked) })
    }

    fn check_conformity(&self) -> PyResult<()> {
        self.inner.check_conformity().map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Mesh({} elements, {} vertices)", self.inner.n_elements(), self.inner.n_vertices())
    }
}

fn indicators_dict<'py>(py: Python<'py>, ind: &Indicators) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("ns_sq", ind.ns_sq.clone())?;
    d.set_item("heat_sq", ind.heat_sq.clone())?;
    d.set_item("total_sq", ind.total_sq.clone())?;
    d.set_item("ns", ind.ns)?;
    d.set_item("heat", ind.heat)?;
    d.set_item("total", ind.total)?;
    Ok(d)
}

/// A converged (or capped) fixed-point solution on one mesh.
#[pyclass(name = "Solution", module = "boussinesq_py")]
struct PySolution {
    mesh: Mesh,
    state: SolutionState,
    config: ProblemConfig,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn picard_iterations(&self) -> usize {
        self.state.picard_iterations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.state.converged
    }

    #[getter]
    fn mesh(&self) -> PyMesh {
        PyMesh { inner: self.mesh.clone() }
    }

    /// `(u_x, u_y, p, T)` at a point of the closed domain.
    fn evaluate(&self, x: f64, y: f64) -> PyResult<(f64, f64, f64, f64)> {
        let p = Point2::new(x, y);
        let u = point_evaluate(&self.mesh, &self.state.u, p).map_err(to_py)?;
        let pr = point_evaluate(&self.mesh, &self.state.p, p).map_err(to_py)?;
        let t = point_evaluate(&self.mesh, &self.state.t, p).map_err(to_py)?;
        Ok((u[0], u[1], pr[0], t[0]))
    }

    /// Squared element indicators and the global estimators.
    fn indicators<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let ind = compute_indicators(&self.mesh, &self.state, &self.config).map_err(to_py)?;
        indicators_dict(py, &ind)
    }

    /// Elements selected by the maximum strategy.
    #[pyo3(signature = (fraction = None))]
    fn mark(&self, fraction: Option<f64>) -> PyResult<Vec<usize>> {
        let ind = compute_indicators(&self.mesh, &self.state, &self.config).map_err(to_py)?;
        Ok(adaptivity::mark(&ind, fraction.unwrap_or(self.config.marking_fraction)))
    }

    fn write_vtk(&self, path: std::path::PathBuf) -> PyResult<()> {
        io::write_vtk(&self.mesh, &self.state, &path).map_err(to_py)
    }
}

fn record_dict<'py>(py: Python<'py>, r: &ConvergenceRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("iter", r.iteration)?;
    d.set_item("n_elements", r.n_elements)?;
    d.set_item("n_vertices", r.n_vertices)?;
    d.set_item("ndof", r.ndof)?;
    d.set_item("estimator_total", r.estimator_total)?;
    d.set_item("estimator_ns", r.estimator_ns)?;
    d.set_item("estimator_heat", r.estimator_heat)?;
    d.set_item("picard_iters", r.picard_iterations)?;
    d.set_item("min_h_at_z", r.min_h_at_z)?;
    d.set_item("min_h", r.min_h)?;
    Ok(d)
}

#[pyclass(name = "AdaptResult", module = "boussinesq_py")]
struct PyAdaptResult {
    outcome: AdaptOutcome,
    config: ProblemConfig,
}

#[pymethods]
impl PyAdaptResult {
    #[getter]
    fn records<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.outcome.records.iter().map(|r| record_dict(py, r)).collect()
    }

    #[getter]
    fn stop_reason(&self) -> String {
        self.outcome.stop.to_string()
    }

    #[getter]
    fn success(&self) -> bool {
        self.outcome.stop.is_success()
    }

    /// Estimator-versus-Ndof slope over the last half of the records.
    fn slope(&self) -> PyResult<f64> {
        adaptivity::rate_fit(&self.outcome.records).map_err(to_py)
    }

    /// Solution on the last solved mesh.
    fn final_solution(&self) -> Option<PySolution> {
        match (&self.outcome.mesh, &self.outcome.state) {
            (Some(mesh), Some(state)) => {
                Some(PySolution { mesh: mesh.clone(), state: state.clone(), config: self.config.clone() })
            }
            _ => None,
        }
    }

    fn write_csv(&self, path: std::path::PathBuf) -> PyResult<()> {
        io::write_convergence_csv(&self.outcome.records, &path).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.outcome.records.len()
    }
}

/// Fixed-point solve on a given mesh.
#[pyfunction]
fn solve(config: &PyConfig, mesh: &PyMesh) -> PyResult<PySolution> {
    config.inner.validate().map_err(to_py)?;
    let spaces = Spaces::new(&mesh.inner, config.inner.element_family);
    let state = picard_solve(&mesh.inner, &spaces, &config.inner).map_err(to_py)?;
    Ok(PySolution { mesh: mesh.inner.clone(), state, config: config.inner.clone() })
}

/// Runs the adaptive loop. The GIL is released while it runs.
#[pyfunction]
fn adapt(py: Python<'_>, config: &PyConfig) -> PyResult<PyAdaptResult> {
    let cfg = config.inner.clone();
    let outcome = py.detach(|| adapt_loop(&cfg)).map_err(to_py)?;
    Ok(PyAdaptResult { outcome, config: cfg })
}

/// Indices with `values[k] >= fraction * max(values)`.
#[pyfunction]
#[pyo3(signature = (values, fraction = 0.5))]
fn mark(values: Vec<f64>, fraction: f64) -> Vec<usize> {
    adaptivity::mark_values(&values, fraction)
}

/// Least-squares slope of log(estimator) against log(ndof) over the last
/// half of the points.
#[pyfunction]
fn rate_fit(ndof: Vec<usize>, estimator: Vec<f64>) -> PyResult<f64> {
    if ndof.len() != estimator.len() {
        return Err(PyValueError::new_err("ndof and estimator differ in length"));
    }
    let records: Vec<ConvergenceRecord> = ndof
        .iter()
        .zip(&estimator)
        .enumerate()
        .map(|(i, (&n, &e))| ConvergenceRecord {
            iteration: i + 1,
            n_elements: 0,
            n_vertices: 0,
            ndof: n,
            estimator_total: e,
            estimator_ns: 0.0,
            estimator_heat: 0.0,
            picard_iterations: 0,
            min_h_at_z: f64::NAN,
            min_h: f64::NAN,
        })
        .collect();
    adaptivity::rate_fit(&records).map_err(to_py)
}

/// Registers the classes and functions on `m`.
pub fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", io::VERSION)?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyAdaptResult>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(adapt, m)?)?;
    m.add_function(wrap_pyfunction!(mark, m)?)?;
    m.add_function(wrap_pyfunction!(rate_fit, m)?)?;
    Ok(())
}

#[pymodule]
fn boussinesq_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    init(m)
}
