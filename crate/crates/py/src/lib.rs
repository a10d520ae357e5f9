//! Python bindings for `tfse-core`.
//!
//! Fields cross the boundary as flat lists of interior values in row-major
//! order (`(M−1)²` complex numbers, node `(j, k)` at `(j−1)(M−1) + (k−1)`).

use num_complex::Complex64;
use pyo3::exceptions::{PyMemoryError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use tfse_core::caputo;
use tfse_core::experiments::{self, Example};
use tfse_core::grid::{ComplexField, MeshSpec};
use tfse_core::linsolve::{Backend, ShiftedLaplacian, Solver};
use tfse_core::stepper::{self, RunOptions};
use tfse_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::MemoryBudgetExceeded { .. } => PyMemoryError::new_err(e.to_string()),
        Error::NonFinite(_) | Error::NearSingular(_) | Error::SingularShift(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn backend(name: &str) -> PyResult<Backend> {
    name.parse().map_err(|e: String| PyValueError::new_err(e))
}

fn example(id: u8) -> PyResult<Example> {
    Example::from_id(id).ok_or_else(|| PyValueError::new_err(format!("example must be 1, 2 or 3, got {id}")))
}

fn options(backend_name: &str) -> PyResult<RunOptions> {
    Ok(RunOptions::with_backend(backend(backend_name)?))
}

/// Gamma function used by the kernels.
#[pyfunction]
fn gamma(x: f64) -> f64 {
    caputo::gamma(x)
}

/// L1 weights, scale μ and complementary multipliers for `n` steps of size `tau`.
#[pyclass(name = "L1Kernel", frozen)]
struct PyL1Kernel {
    inner: caputo::L1Kernel,
}

#[pymethods]
impl PyL1Kernel {
    #[new]
    fn new(alpha: f64, tau: f64, n: usize) -> PyResult<Self> {
        Ok(Self { inner: caputo::L1Kernel::new(alpha, tau, n).map_err(to_py)? })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau()
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu()
    }

    fn weights(&self) -> Vec<f64> {
        self.inner.a().to_vec()
    }

    fn theta(&self) -> Vec<f64> {
        self.inner.theta().values().to_vec()
    }

    /// Discrete Caputo derivative at the last level of `history` (u⁰ … uⁿ).
    fn apply(&self, history: Vec<f64>) -> PyResult<f64> {
        self.inner.apply(&history).map_err(to_py)
    }

    fn apply_complex(&self, history: Vec<Complex64>) -> PyResult<Complex64> {
        self.inner.apply(&history).map_err(to_py)
    }

    /// `Σ θ_{n−i} vⁱ` for `history = v⁰ … vⁿ`.
    fn apply_theta(&self, history: Vec<f64>) -> PyResult<f64> {
        self.inner.theta().apply(&history).map_err(to_py)
    }
}

#[pyfunction]
#[pyo3(signature = (alpha, gamma_exp, n, final_time = 1.0))]
fn truncation_probe(alpha: f64, gamma_exp: f64, n: usize, final_time: f64) -> PyResult<f64> {
    caputo::truncation_probe(alpha, gamma_exp, final_time, n).map_err(to_py)
}

/// Uniform space-time mesh on `[0, L]² × [0, T]`.
#[pyclass(name = "Mesh", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMesh {
    inner: MeshSpec,
}

#[pymethods]
impl PyMesh {
    #[new]
    #[pyo3(signature = (alpha, m, n, length = 1.0, final_time = 1.0))]
    fn new(alpha: f64, m: usize, n: usize, length: f64, final_time: f64) -> PyResult<Self> {
        Ok(Self { inner: MeshSpec::new(alpha, length, final_time, m, n).map_err(to_py)? })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }
    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }
    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }
    #[getter]
    fn h(&self) -> f64 {
        self.inner.h()
    }
    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau()
    }

    fn __repr__(&self) -> String {
        format!("Mesh(alpha={}, m={}, n={}, h={}, tau={})", self.inner.alpha(), self.inner.m(), self.inner.n(), self.inner.h(), self.inner.tau())
    }
}

/// Solves `(σI + Δ_h) U = b` for interior values `b` on an `m × m` mesh with spacing `h`.
#[pyfunction]
#[pyo3(signature = (sigma, m, h, rhs, backend = "dst"))]
fn solve_shifted_laplacian(sigma: Complex64, m: usize, h: f64, rhs: Vec<Complex64>, backend: &str) -> PyResult<Vec<Complex64>> {
    let op = ShiftedLaplacian::with_grid(sigma, m, h).map_err(to_py)?;
    let need = (m - 1) * (m - 1);
    if rhs.len() != need {
        return Err(PyValueError::new_err(format!("rhs needs {need} interior values, got {}", rhs.len())));
    }
    let solver = Solver::new(self::backend(backend)?, op).map_err(to_py)?;
    Ok(solver.solve_interior(&rhs))
}

/// Applies the five-point Laplacian to interior values (zero boundary).
#[pyfunction]
fn laplacian_5pt(m: usize, h: f64, values: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    let need = (m.max(2) - 1) * (m.max(2) - 1);
    if values.len() != need {
        return Err(PyValueError::new_err(format!("need {need} interior values, got {}", values.len())));
    }
    Ok(ComplexField::from_interior(m, h, &values).laplacian_5pt().interior())
}

/// Time levels `U⁰ … U^N` of one run.
#[pyclass(name = "History", frozen)]
struct PyHistory {
    inner: stepper::History,
}

#[pymethods]
impl PyHistory {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }
    #[getter]
    fn h(&self) -> f64 {
        self.inner.h()
    }
    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau()
    }

    /// Interior values of level `n`.
    fn level(&self, n: usize) -> PyResult<Vec<Complex64>> {
        if n >= self.inner.len() {
            return Err(PyValueError::new_err(format!("level {n} out of range 0..{}", self.inner.len())));
        }
        Ok(self.inner.level(n).to_vec())
    }

    fn last(&self) -> Vec<Complex64> {
        self.inner.last().to_vec()
    }

    /// Discrete L² norm of every level.
    fn l2_profile(&self) -> Vec<f64> {
        experiments::l2_profile(&self.inner)
    }

    fn max_linf(&self) -> f64 {
        experiments::max_linf(&self.inner)
    }
}

/// Runs example 1 (manufactured), 2 (smooth initial data) or 3 (kinked initial data).
#[pyfunction]
#[pyo3(signature = (example_id, mesh, backend = "dst"))]
fn run(py: Python<'_>, example_id: u8, mesh: &PyMesh, backend: &str) -> PyResult<PyHistory> {
    let problem = example(example_id)?.problem_on(mesh.inner).map_err(to_py)?;
    let opts = options(backend)?;
    let history = py.detach(|| stepper::run_with(&problem, &opts)).map_err(to_py)?;
    Ok(PyHistory { inner: history })
}

/// Manufactured-solution errors of one run.
#[pyclass(name = "ErrorReport", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyErrorReport {
    alpha: f64,
    n: usize,
    m: usize,
    local_error: f64,
    global_error: f64,
    local_rate: Option<f64>,
    global_rate: Option<f64>,
}

impl From<experiments::ErrorReport> for PyErrorReport {
    fn from(r: experiments::ErrorReport) -> Self {
        Self {
            alpha: r.alpha,
            n: r.n,
            m: r.m,
            local_error: r.local_error,
            global_error: r.global_error,
            local_rate: r.local_rate,
            global_rate: r.global_rate,
        }
    }
}

#[pymethods]
impl PyErrorReport {
    fn __repr__(&self) -> String {
        format!(
            "ErrorReport(alpha={}, n={}, m={}, local_error={:e}, global_error={:e})",
            self.alpha, self.n, self.m, self.local_error, self.global_error
        )
    }
}

#[pyfunction]
#[pyo3(signature = (mesh, backend = "dst"))]
fn manufactured_errors(py: Python<'_>, mesh: &PyMesh, backend: &str) -> PyResult<PyErrorReport> {
    let opts = options(backend)?;
    let mesh = mesh.inner;
    py.detach(|| experiments::manufactured_errors(mesh, &opts)).map(Into::into).map_err(to_py)
}

/// Local and global errors over an `(α, N)` grid; `M = ⌈√N⌉` unless `m` is given.
#[pyfunction]
#[pyo3(signature = (alphas, ns, m = None, backend = "dst"))]
fn convergence_table(
    py: Python<'_>,
    alphas: Vec<f64>,
    ns: Vec<usize>,
    m: Option<usize>,
    backend: &str,
) -> PyResult<Vec<PyErrorReport>> {
    let opts = options(backend)?;
    let rows = py.detach(|| experiments::convergence_table(&alphas, &ns, m, &opts)).map_err(to_py)?;
    Ok(rows.into_iter().map(Into::into).collect())
}

/// `‖U^N − W^{2N}‖` at the final time.
#[pyfunction]
#[pyo3(signature = (example_id, alpha, n, m = 50, backend = "dst"))]
fn two_mesh(py: Python<'_>, example_id: u8, alpha: f64, n: usize, m: usize, backend: &str) -> PyResult<f64> {
    let ex = example(example_id)?;
    let opts = options(backend)?;
    py.detach(|| experiments::two_mesh(ex, alpha, n, m, &opts)).map(|r| r.e_l).map_err(to_py)
}

/// `max_n ‖Uⁿ − Ũⁿ‖ / ‖u₀ − ũ₀‖` with `ũ₀ = (1 + ε) u₀`, smooth initial data.
#[pyfunction]
#[pyo3(signature = (alpha, n, m, epsilon, backend = "dst"))]
fn stability_experiment(py: Python<'_>, alpha: f64, n: usize, m: usize, epsilon: f64, backend: &str) -> PyResult<f64> {
    let opts = options(backend)?;
    py.detach(|| experiments::stability_experiment(alpha, n, m, epsilon, &opts)).map_err(to_py)
}

#[pymodule]
fn tfse(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyL1Kernel>()?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PyHistory>()?;
    m.add_class::<PyErrorReport>()?;
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(truncation_probe, m)?)?;
    m.add_function(wrap_pyfunction!(solve_shifted_laplacian, m)?)?;
    m.add_function(wrap_pyfunction!(laplacian_5pt, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(manufactured_errors, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_table, m)?)?;
    m.add_function(wrap_pyfunction!(two_mesh, m)?)?;
    m.add_function(wrap_pyfunction!(stability_experiment, m)?)?;
    Ok(())
}
