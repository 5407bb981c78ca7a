//! Python bindings for `smax_core`. Vectors cross the boundary as lists of
//! floats; input errors raise `ValueError`, numerical failures `RuntimeError`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use smax_core::dynamics::{self, IntegratorConfig};
use smax_core::equilibrium::{self, SolverConfig};
use smax_core::games;
use smax_core::properties::{self, OperatorUnderTest, SampleEnsemble, SuiteConfig};
use smax_core::softmax::{self as sm, GeneralizedTemperature, GumbelSampler};
use smax_core::{Error, MixedStrategy, ScoreVector, Temperature};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::Io(_) | Error::Json(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn scores(z: Vec<f64>) -> PyResult<ScoreVector> {
    ScoreVector::new(z).map_err(py_err)
}

fn temp(lam: f64) -> PyResult<Temperature> {
    Temperature::new(lam).map_err(py_err)
}

fn strategy(x: Vec<f64>) -> PyResult<MixedStrategy> {
    MixedStrategy::new(x).map_err(py_err)
}

#[pyclass(name = "MatrixGame", module = "smax", frozen)]
struct PyMatrixGame {
    inner: smax_core::MatrixGame,
}

#[pymethods]
impl PyMatrixGame {
    #[new]
    #[pyo3(signature = (rows, name=None))]
    fn new(rows: Vec<Vec<f64>>, name: Option<String>) -> PyResult<Self> {
        let g = smax_core::MatrixGame::from_rows(&rows).map_err(py_err)?;
        Ok(PyMatrixGame {
            inner: match name {
                Some(n) => g.with_name(n),
                None => g,
            },
        })
    }

    #[staticmethod]
    fn rock_paper_scissors() -> Self {
        PyMatrixGame {
            inner: smax_core::MatrixGame::rock_paper_scissors(),
        }
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyMatrixGame {
            inner: smax_core::io::load_game(path).map_err(py_err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        smax_core::io::save_game(&self.inner, path).map_err(py_err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn name(&self) -> Option<String> {
        self.inner.name().map(str::to_string)
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.to_rows()
    }

    fn payoff(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        games::payoff(&self.inner, &strategy(x)?).map_err(py_err)
    }

    /// Largest eigenvalue of the symmetric part restricted to the tangent space.
    fn tangent_max_eigenvalue(&self) -> f64 {
        games::tangent_max_eigenvalue(&self.inner)
    }

    #[pyo3(signature = (samples=1000, seed=0))]
    fn is_stable(&self, samples: usize, seed: u64) -> PyResult<bool> {
        let ens = SampleEnsemble::new(self.inner.n(), samples, -1.0, 1.0, seed).map_err(py_err)?;
        Ok(games::check_stable_game(&self.inner, &ens).map_err(py_err)?.stable)
    }

    fn __repr__(&self) -> String {
        format!("MatrixGame(n={}, name={:?})", self.inner.n(), self.inner.name())
    }
}

#[pyfunction]
#[pyo3(signature = (z, lam=1.0))]
fn softmax(z: Vec<f64>, lam: f64) -> PyResult<Vec<f64>> {
    Ok(sm::softmax(&scores(z)?, temp(lam)?).into_vec())
}

#[pyfunction]
#[pyo3(signature = (z, lam=1.0))]
fn lse(z: Vec<f64>, lam: f64) -> PyResult<f64> {
    Ok(sm::lse(&scores(z)?, temp(lam)?))
}

#[pyfunction]
fn generalized_softmax(z: Vec<f64>, lambdas: Vec<f64>) -> PyResult<Vec<f64>> {
    let gt = GeneralizedTemperature::new(lambdas).map_err(py_err)?;
    Ok(sm::generalized_softmax(&scores(z)?, &gt).map_err(py_err)?.into_vec())
}

#[pyfunction]
#[pyo3(signature = (z, lam=1.0))]
fn softmax_jacobian(z: Vec<f64>, lam: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(sm::softmax_jacobian(&scores(z)?, temp(lam)?).to_rows())
}

#[pyfunction]
#[pyo3(signature = (x, lam=1.0))]
fn negative_entropy(x: Vec<f64>, lam: f64) -> PyResult<f64> {
    Ok(sm::negative_entropy(&strategy(x)?, temp(lam)?))
}

#[pyfunction]
fn vecmax(z: Vec<f64>) -> PyResult<(f64, usize)> {
    Ok(sm::vecmax(&scores(z)?))
}

#[pyfunction]
#[pyo3(signature = (z, lam=1.0, seed=0))]
fn gumbel_choice(z: Vec<f64>, lam: f64, seed: u64) -> PyResult<usize> {
    Ok(sm::gumbel_choice(&scores(z)?, temp(lam)?, seed))
}

#[pyfunction]
#[pyo3(signature = (z, lam=1.0, draws=100_000, seed=0))]
fn gumbel_frequencies(z: Vec<f64>, lam: f64, draws: usize, seed: u64) -> PyResult<Vec<f64>> {
    if draws == 0 {
        return Err(PyValueError::new_err("draws must be positive"));
    }
    Ok(GumbelSampler::new(seed).frequencies(&scores(z)?, temp(lam)?, draws))
}

#[pyfunction]
#[pyo3(signature = (x, u, lam=1.0))]
fn replicator_field(x: Vec<f64>, u: Vec<f64>, lam: f64) -> PyResult<Vec<f64>> {
    dynamics::replicator_field(&strategy(x)?, &u, temp(lam)?).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (game, z, lam=1.0))]
fn score_field(game: PyRef<'_, PyMatrixGame>, z: Vec<f64>, lam: f64) -> PyResult<Vec<f64>> {
    dynamics::score_field(&game.inner, temp(lam)?, &scores(z)?).map_err(py_err)
}

/// Returns `{"t": [...], "z": [[...]], "x": [[...]]}`.
#[pyfunction]
#[pyo3(signature = (game, z0, lam=1.0, dt=0.01, t_end=50.0, record_every=10))]
fn integrate<'py>(
    py: Python<'py>,
    game: PyRef<'_, PyMatrixGame>,
    z0: Vec<f64>,
    lam: f64,
    dt: f64,
    t_end: f64,
    record_every: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = IntegratorConfig::new(dt, t_end, record_every).map_err(py_err)?;
    let traj = dynamics::integrate(&game.inner, temp(lam)?, &scores(z0)?, &cfg).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("t", traj.samples.iter().map(|s| s.t).collect::<Vec<_>>())?;
    d.set_item("z", traj.samples.iter().map(|s| s.z.clone()).collect::<Vec<_>>())?;
    d.set_item("x", traj.samples.iter().map(|s| s.x.clone()).collect::<Vec<_>>())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (z, z_star, lam=1.0))]
fn lyapunov_value(z: Vec<f64>, z_star: Vec<f64>, lam: f64) -> PyResult<f64> {
    dynamics::lyapunov_value(&scores(z)?, &scores(z_star)?, temp(lam)?).map_err(py_err)
}

fn solver_config(tol: f64, max_iter: usize, damping: f64) -> PyResult<SolverConfig> {
    SolverConfig::new(tol, max_iter, damping).map_err(py_err)
}

fn initial(game: &PyMatrixGame, z0: Option<Vec<f64>>) -> PyResult<ScoreVector> {
    match z0 {
        Some(z) => scores(z),
        None => ScoreVector::zeros(game.inner.n()).map_err(py_err),
    }
}

/// Returns the solver result as a dict; non-convergence is reported through
/// `converged`, not raised.
#[pyfunction]
#[pyo3(signature = (game, lam=1.0, z0=None, tol=1e-10, max_iter=100_000, damping=0.5))]
fn solve_fixed_point<'py>(
    py: Python<'py>,
    game: PyRef<'_, PyMatrixGame>,
    lam: f64,
    z0: Option<Vec<f64>>,
    tol: f64,
    max_iter: usize,
    damping: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = solver_config(tol, max_iter, damping)?;
    let r = equilibrium::solve_fixed_point(&game.inner, temp(lam)?, &initial(&game, z0)?, &cfg).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("z_star", r.z_star.as_slice().to_vec())?;
    d.set_item("x_star", r.x_star.as_slice().to_vec())?;
    d.set_item("residual", r.residual)?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("converged", r.converged)?;
    d.set_item("residual_history", r.residual_history)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (game, lam=1.0, z0=None, tol=1e-10, max_iter=100_000, damping=0.5))]
fn logit_equilibrium(
    game: PyRef<'_, PyMatrixGame>,
    lam: f64,
    z0: Option<Vec<f64>>,
    tol: f64,
    max_iter: usize,
    damping: f64,
) -> PyResult<Vec<f64>> {
    let cfg = solver_config(tol, max_iter, damping)?;
    let x = equilibrium::logit_equilibrium(&game.inner, temp(lam)?, &initial(&game, z0)?, &cfg).map_err(py_err)?;
    Ok(x.into_vec())
}

#[pyfunction]
#[pyo3(signature = (game, x_star, lam=1.0))]
fn verify_equilibrium(game: PyRef<'_, PyMatrixGame>, x_star: Vec<f64>, lam: f64) -> PyResult<f64> {
    equilibrium::verify_equilibrium(&game.inner, temp(lam)?, &strategy(x_star)?).map_err(py_err)
}

/// `(bound, certified)` with `bound = ‖A‖∞·√n·λ`.
#[pyfunction]
#[pyo3(signature = (game, lam=1.0))]
fn contraction_certificate(game: PyRef<'_, PyMatrixGame>, lam: f64) -> PyResult<(f64, bool)> {
    let c = equilibrium::contraction_certificate(&game.inner, temp(lam)?);
    Ok((c.bound, c.certified))
}

/// Runs the sampled property suite and returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (dims=vec![2, 3, 5, 10], lambdas=vec![0.1, 0.5, 1.0, 2.0, 10.0], samples=10_000, seed=7, lambda_scale=1.0))]
fn run_suite<'py>(
    py: Python<'py>,
    dims: Vec<usize>,
    lambdas: Vec<f64>,
    samples: usize,
    seed: u64,
    lambda_scale: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = SuiteConfig {
        dims,
        lambdas,
        samples,
        seed,
        ..SuiteConfig::default()
    };
    let op = OperatorUnderTest::with_lambda_scale(lambda_scale).map_err(py_err)?;
    let report = py.detach(|| properties::run_suite(&cfg, &op)).map_err(py_err)?;
    let json = serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (json,))
}

#[pymodule]
fn smax(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMatrixGame>()?;
    m.add_function(wrap_pyfunction!(softmax, m)?)?;
    m.add_function(wrap_pyfunction!(lse, m)?)?;
    m.add_function(wrap_pyfunction!(generalized_softmax, m)?)?;
    m.add_function(wrap_pyfunction!(softmax_jacobian, m)?)?;
    m.add_function(wrap_pyfunction!(negative_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(vecmax, m)?)?;
    m.add_function(wrap_pyfunction!(gumbel_choice, m)?)?;
    m.add_function(wrap_pyfunction!(gumbel_frequencies, m)?)?;
    m.add_function(wrap_pyfunction!(replicator_field, m)?)?;
    m.add_function(wrap_pyfunction!(score_field, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_value, m)?)?;
    m.add_function(wrap_pyfunction!(solve_fixed_point, m)?)?;
    m.add_function(wrap_pyfunction!(logit_equilibrium, m)?)?;
    m.add_function(wrap_pyfunction!(verify_equilibrium, m)?)?;
    m.add_function(wrap_pyfunction!(contraction_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
