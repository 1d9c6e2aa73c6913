//! Python module `bpr`: forward models, metrics and solvers on flat lists of
//! complex numbers (row-major).

pub mod api;

use bpr_core::domain::aligned_relative_error as aligned;
use bpr_core::BprError;
use num_complex::Complex64 as C64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: BprError) -> PyErr {
    match e {
        BprError::Numerical(m) => PyRuntimeError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// One of the four bilinear measurement models.
#[pyclass(name = "Model", module = "bpr", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyModel {
    inner: bpr_core::domain::Model,
}

#[pymethods]
impl PyModel {
    /// Ptychography on a jittered raster (Fourier ptychography if `fourier`).
    #[staticmethod]
    #[pyo3(signature = (image_side, probe_side, step, jitter=0, seed=0, fourier=false))]
    fn ptycho(image_side: usize, probe_side: usize, step: usize, jitter: usize, seed: u64, fourier: bool) -> PyResult<Self> {
        Ok(Self { inner: api::ptycho(image_side, probe_side, step, jitter, seed, fourier).map_err(py_err)? })
    }

    #[staticmethod]
    fn frog(side: usize, frames: usize, shift_step: usize) -> PyResult<Self> {
        Ok(Self { inner: bpr_core::domain::Model::frog(side, frames, shift_step).map_err(py_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (side, fourier=false))]
    fn convolution(side: usize, fourier: bool) -> PyResult<Self> {
        Ok(Self { inner: bpr_core::domain::Model::convolution(side, fourier).map_err(py_err)? })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Self { inner: api::model_from_json(s).map_err(py_err)? })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("models serialize")
    }

    #[getter]
    fn probe_side(&self) -> usize {
        self.inner.probe_side()
    }

    #[getter]
    fn image_side(&self) -> usize {
        self.inner.image_side()
    }

    #[getter]
    fn frame_count(&self) -> usize {
        self.inner.frame_count()
    }

    #[getter]
    fn frame_len(&self) -> usize {
        self.inner.frame_len()
    }

    fn forward(&self, w: Vec<C64>, u: Vec<C64>) -> PyResult<Vec<C64>> {
        api::forward(&self.inner, w, u).map_err(py_err)
    }

    fn adjoint_u(&self, w: Vec<C64>, z: Vec<C64>) -> PyResult<Vec<C64>> {
        api::adjoint_u(&self.inner, w, z).map_err(py_err)
    }

    fn adjoint_w(&self, u: Vec<C64>, z: Vec<C64>) -> PyResult<Vec<C64>> {
        api::adjoint_w(&self.inner, u, z).map_err(py_err)
    }

    fn intensity(&self, w: Vec<C64>, u: Vec<C64>) -> PyResult<Vec<f64>> {
        api::intensity(&self.inner, w, u).map_err(py_err)
    }

    /// Runs a solver; returns the report as a JSON string.
    #[pyo3(signature = (data, algorithm, config=None, truth=None))]
    fn reconstruct(
        &self,
        py: Python<'_>,
        data: Vec<f64>,
        algorithm: &str,
        config: Option<&str>,
        truth: Option<(Vec<C64>, Vec<C64>)>,
    ) -> PyResult<String> {
        let model = self.inner.clone();
        let algorithm = algorithm.to_owned();
        let config = config.map(str::to_owned);
        py.detach(move || api::reconstruct(&model, data, &algorithm, config.as_deref(), truth))
            .map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Model({})", self.to_json())
    }
}

#[pyfunction]
fn random_probe(side: usize, seed: u64) -> Vec<C64> {
    api::random_probe(side, seed)
}

#[pyfunction]
fn random_sample(side: usize, seed: u64) -> Vec<C64> {
    api::random_sample(side, seed)
}

#[pyfunction]
fn simulate_poisson(f: Vec<f64>, scale: f64, seed: u64) -> PyResult<Vec<f64>> {
    api::poisson(f, scale, seed).map_err(py_err)
}

/// Entrywise proximal map of a metric (`agm`, `ipm`, `igm`, `stagm`, ...).
#[pyfunction]
#[pyo3(signature = (metric, beta, v, f, epsilon=0.0))]
fn prox(metric: &str, beta: f64, v: Vec<C64>, f: Vec<f64>, epsilon: f64) -> PyResult<Vec<C64>> {
    api::prox(metric, epsilon, beta, v, f).map_err(py_err)
}

/// `min_c ||c x - x_ref|| / ||x_ref||`
#[pyfunction]
fn aligned_relative_error(x: Vec<C64>, x_ref: Vec<C64>) -> PyResult<f64> {
    aligned(&x, &x_ref).map_err(py_err)
}

/// Lifted convex recovery on a random subspace instance; returns
/// `(h, m, h_true, m_true, (ratio_h, ratio_m))`.
#[pyfunction]
#[pyo3(signature = (n, k1, k2, seed=0, config=None))]
#[allow(clippy::type_complexity)]
fn lifted_random(
    n: usize,
    k1: usize,
    k2: usize,
    seed: u64,
    config: Option<&str>,
) -> PyResult<(Vec<C64>, Vec<C64>, Vec<C64>, Vec<C64>, (f64, f64))> {
    api::lifted_random(n, k1, k2, seed, config).map_err(py_err)
}

#[pymodule]
fn bpr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(random_probe, m)?)?;
    m.add_function(wrap_pyfunction!(random_sample, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_poisson, m)?)?;
    m.add_function(wrap_pyfunction!(prox, m)?)?;
    m.add_function(wrap_pyfunction!(aligned_relative_error, m)?)?;
    m.add_function(wrap_pyfunction!(lifted_random, m)?)?;
    m.add("ALGORITHMS", bpr_core::solvers::Algorithm::ALL.map(|a| a.name()).to_vec())?;
    Ok(())
}
