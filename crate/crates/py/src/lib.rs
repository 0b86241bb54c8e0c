//! Python bindings for the map catalogue, interpolating fields, embedding
//! errors, resonance location and stability scans.

use std::collections::BTreeMap;

use discavg_core::experiments::{self, StabilityRecord};
use discavg_core::hamiltonian::{self, EmbeddingSettings, PhaseBox, DEFAULT_FLOW_TOL};
use discavg_core::interpolation::{self, Scheme};
use discavg_core::resonance::{self, ResonanceSite};
use discavg_core::{catalog, PhasePoint};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: discavg_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn scheme(name: &str) -> PyResult<Scheme> {
    name.parse().map_err(py_err)
}

/// An exact symplectic map `(I, phi) -> (I', phi')` from the catalogue.
#[pyclass(name = "MapModel", frozen)]
struct PyMapModel {
    inner: discavg_core::MapModel,
}

#[pymethods]
impl PyMapModel {
    /// `name` is one of twist, standard, froeschle2, nonexact.
    #[new]
    #[pyo3(signature = (name, eps, params = None))]
    fn new(name: &str, eps: f64, params: Option<BTreeMap<String, f64>>) -> PyResult<Self> {
        let inner = catalog::by_name(name, &params.unwrap_or_default(), eps).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.inner.eps()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn energy(&self, action: Vec<f64>) -> f64 {
        self.inner.energy(&action)
    }

    fn frequency(&self, action: Vec<f64>) -> Vec<f64> {
        self.inner.frequency(&action)
    }

    fn generating_value(&self, action: Vec<f64>, angle: Vec<f64>) -> PyResult<f64> {
        self.inner.generating_value(&action, &angle).map_err(py_err)
    }

    /// One step; returns `(action, angle)` with angles unreduced.
    fn step(&self, action: Vec<f64>, angle: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let x = self.inner.step(&PhasePoint::new(action, angle)).map_err(py_err)?;
        Ok((x.action, x.angle))
    }

    fn step_inverse(&self, action: Vec<f64>, angle: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let x = self.inner.step_inverse(&PhasePoint::new(action, angle)).map_err(py_err)?;
        Ok((x.action, x.angle))
    }

    /// The orbit `x_0, ..., x_n` as `(action, angle)` pairs.
    fn iterate(&self, action: Vec<f64>, angle: Vec<f64>, n: usize) -> PyResult<Vec<(Vec<f64>, Vec<f64>)>> {
        let orbit = self.inner.iterate(&PhasePoint::new(action, angle), n).map_err(py_err)?;
        Ok(orbit.into_iter().map(|x| (x.action, x.angle)).collect())
    }

    fn __repr__(&self) -> String {
        format!("MapModel({:?}, eps={:e}, dim={})", self.inner.name(), self.inner.eps(), self.inner.dim())
    }
}

/// Weights `p_k`, `k = 0..m`, of `X_m(x_0) = sum_k p_k x_k`.
#[pyfunction]
fn newton_weights(m: usize) -> PyResult<Vec<f64>> {
    Ok(interpolation::newton_weights(m).map_err(py_err)?.weights)
}

/// Interpolating vector field of order `m` at the flat point `[I.., phi..]`.
#[pyfunction]
#[pyo3(signature = (model, x0, m, scheme_name = "newton"))]
fn interpolating_vf(model: &PyMapModel, x0: Vec<f64>, m: usize, scheme_name: &str) -> PyResult<Vec<f64>> {
    interpolation::interpolating_vf(&model.inner, &x0, m, scheme(scheme_name)?).map_err(py_err)
}

#[pyclass(name = "EmbeddingReport", get_all, frozen)]
struct PyEmbeddingReport {
    m: usize,
    eps_hat: f64,
    max_error: f64,
    max_field: f64,
    bound: f64,
    admissible: bool,
    within_bound: bool,
    points: usize,
    failed_points: usize,
}

/// Sup distance between the time-one flow of `X_m` and the map over a grid
/// of the box `|I - center| <= radius`, all angles.
#[pyfunction]
#[pyo3(signature = (model, m, center, radius, grid = 5, delta = 0.5, scheme_name = "newton"))]
fn embedding_error(
    model: &PyMapModel,
    m: usize,
    center: Vec<f64>,
    radius: f64,
    grid: usize,
    delta: f64,
    scheme_name: &str,
) -> PyResult<PyEmbeddingReport> {
    let settings = EmbeddingSettings { scheme: scheme(scheme_name)?, delta, flow_tol: DEFAULT_FLOW_TOL };
    let region = PhaseBox::action_ball(&center, radius);
    let r = hamiltonian::embedding_error(&model.inner, m, &region, grid, settings).map_err(py_err)?;
    Ok(PyEmbeddingReport {
        m: r.m,
        eps_hat: r.eps_hat,
        max_error: r.max_error,
        max_field: r.max_field,
        bound: r.bound,
        admissible: r.admissible,
        within_bound: r.within_bound,
        points: r.points,
        failed_points: r.failed_points,
    })
}

/// Largest order with `m <= delta / (6 e eps_hat) - d`, at least 1.
#[pyfunction]
fn optimal_order(delta: f64, eps_hat: f64, d: usize) -> usize {
    hamiltonian::optimal_order(delta, eps_hat, d).m
}

#[pyclass(name = "Site", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySite {
    n: usize,
    omega_star: Vec<f64>,
    i_star: Vec<f64>,
    rho_n: f64,
}

impl From<ResonanceSite> for PySite {
    fn from(s: ResonanceSite) -> Self {
        Self { n: s.n, omega_star: s.omega_star, i_star: s.i_star, rho_n: s.rho_n }
    }
}

/// Smallest `n < big_n` approximating `omega` to within `1 / (n big_n^(1/d))`;
/// returns `(n, omega_star, error)`.
#[pyfunction]
fn dirichlet(omega: Vec<f64>, big_n: f64) -> PyResult<(usize, Vec<f64>, f64)> {
    let a = resonance::dirichlet(&omega, big_n).map_err(py_err)?;
    Ok((a.n, a.omega_star, a.error))
}

/// Resonance site covering the action `i0` at the model's eps.
#[pyfunction]
#[pyo3(signature = (model, i0, gamma = 2.0))]
fn locate_site(model: &PyMapModel, i0: Vec<f64>, gamma: f64) -> PyResult<PySite> {
    let params = resonance::covering_params(&model.inner, model.inner.eps(), gamma).map_err(py_err)?;
    let (site, _) = resonance::locate_site(&model.inner, &i0, &params).map_err(py_err)?;
    Ok(site.into())
}

#[pyclass(name = "StabilityRecord", get_all, frozen)]
struct PyStabilityRecord {
    initial: Vec<f64>,
    site: Option<PySite>,
    horizon: usize,
    steps: usize,
    max_excursion: f64,
    action_spread: f64,
    exit_index: Option<usize>,
    failure: Option<String>,
}

impl From<StabilityRecord> for PyStabilityRecord {
    fn from(r: StabilityRecord) -> Self {
        Self {
            initial: r.initial,
            site: r.site.map(PySite::from),
            horizon: r.horizon,
            steps: r.steps,
            max_excursion: r.max_excursion,
            action_spread: r.action_spread,
            exit_index: r.exit_index,
            failure: r.failure,
        }
    }
}

/// Uniform seeds with actions in `[lo, hi)^d`, angles in `[0, 1)^d`.
#[pyfunction]
fn random_seeds(d: usize, lo: f64, hi: f64, count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    experiments::random_seeds(d, lo, hi, count, seed).into_iter().map(|x| (x.action, x.angle)).collect()
}

/// Iterates each seed for `horizon` steps and records how far its action moves.
/// An orbit leaving `|I - I0| <= radius` is stopped.
#[pyfunction]
fn stability_scan(
    py: Python<'_>,
    model: &PyMapModel,
    seeds: Vec<(Vec<f64>, Vec<f64>)>,
    horizon: usize,
    radius: f64,
) -> Vec<PyStabilityRecord> {
    let seeds: Vec<PhasePoint> = seeds.into_iter().map(|(a, p)| PhasePoint::new(a, p)).collect();
    let records = py.detach(|| experiments::stability_scan(&model.inner, &seeds, horizon, radius));
    records.into_iter().map(PyStabilityRecord::from).collect()
}

#[pymodule]
fn discavg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMapModel>()?;
    m.add_class::<PyEmbeddingReport>()?;
    m.add_class::<PySite>()?;
    m.add_class::<PyStabilityRecord>()?;
    m.add_function(wrap_pyfunction!(newton_weights, m)?)?;
    m.add_function(wrap_pyfunction!(interpolating_vf, m)?)?;
    m.add_function(wrap_pyfunction!(embedding_error, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_order, m)?)?;
    m.add_function(wrap_pyfunction!(dirichlet, m)?)?;
    m.add_function(wrap_pyfunction!(locate_site, m)?)?;
    m.add_function(wrap_pyfunction!(random_seeds, m)?)?;
    m.add_function(wrap_pyfunction!(stability_scan, m)?)?;
    Ok(())
}
