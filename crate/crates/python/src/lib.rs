//! Python bindings. Matrices cross the boundary as nested lists of `complex`;
//! structured results (certificates, tables, reports) come back as dicts.

use flagcap::linalg::CMatrix;
use flagcap::{
    self as core, DensityOperator, FdcParams, FlagPair, KrausChannel, OptimizationReport,
};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    PyModule::import(py, "json")?.call_method1("loads", (text,))
}

fn matrix_from_rows(rows: Vec<Vec<Complex64>>) -> PyResult<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(PyValueError::new_err("expected a non-empty rectangular matrix"));
    }
    let m = rows[0].len();
    Ok(CMatrix::from_fn(n, m, |r, c| rows[r][c]))
}

fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn density(rows: Vec<Vec<Complex64>>) -> PyResult<DensityOperator> {
    DensityOperator::new(matrix_from_rows(rows)?).map_err(err)
}

/// Diagonal flags `(c^2, 1 - c^2)` by default, pure flags when `theta` is set.
/// Without either the degradability threshold `c(p)` is used.
fn flags(p: f64, c: Option<f64>, theta: Option<f64>) -> PyResult<FlagPair> {
    match (c, theta) {
        (Some(_), Some(_)) => Err(PyValueError::new_err("give at most one of c and theta")),
        (_, Some(theta)) => FlagPair::pure(theta).map_err(err),
        (Some(c), None) => FlagPair::diagonal(c).map_err(err),
        (None, None) => FlagPair::diagonal(core::c_threshold(p).map_err(err)?).map_err(err),
    }
}

#[pyfunction]
fn q_fdc(d: usize, p: f64) -> PyResult<f64> {
    core::q_fdc(d, p).map_err(err)
}

#[pyfunction]
fn c_threshold(p: f64) -> PyResult<f64> {
    core::c_threshold(p).map_err(err)
}

#[pyfunction]
fn q_lower(d: usize, p: f64) -> PyResult<f64> {
    core::q_lower(d, p).map_err(err)
}

#[pyfunction]
fn f1_bound(d: usize, p: f64) -> PyResult<f64> {
    core::f1_bound(d, p).map_err(err)
}

#[pyfunction]
fn f2_bound(d: usize, p: f64) -> PyResult<f64> {
    core::f2_bound(d, p).map_err(err)
}

#[pyfunction]
fn q_pure_flag(d: usize, p: f64, theta: f64) -> PyResult<f64> {
    core::q_pure_flag(d, p, theta).map_err(err)
}

#[pyfunction]
fn delta_gap(p: f64) -> PyResult<f64> {
    core::delta_gap(p).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (p, dim, c=None, theta=None))]
fn t_entropy(p: f64, dim: usize, c: Option<f64>, theta: Option<f64>) -> PyResult<f64> {
    core::t_entropy(p, dim, &flags(p, c, theta)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (d, p, c=None, theta=None))]
fn c1_capacity(d: usize, p: f64, c: Option<f64>, theta: Option<f64>) -> PyResult<f64> {
    core::c1_capacity(d, p, &flags(p, c, theta)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (d, p, c=None, theta=None))]
fn ce_capacity(d: usize, p: f64, c: Option<f64>, theta: Option<f64>) -> PyResult<f64> {
    core::ce_capacity(d, p, &flags(p, c, theta)?).map_err(err)
}

#[pyfunction]
fn degrading_params(py: Python<'_>, p: f64, c: f64) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &core::degrading_params(p, c).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (d, p, c=None, tol=1e-9))]
fn verify_degradability(
    py: Python<'_>,
    d: usize,
    p: f64,
    c: Option<f64>,
    tol: f64,
) -> PyResult<Bound<'_, PyAny>> {
    let params = match c {
        Some(c) => FdcParams::new(d, p, c),
        None => FdcParams::at_threshold(d, p),
    }
    .map_err(err)?;
    to_py(py, &core::verify_degradability(&params, tol).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (d, p_min=0.0, p_max=1.0, steps=2000))]
fn bounds_table(
    py: Python<'_>,
    d: usize,
    p_min: f64,
    p_max: f64,
    steps: usize,
) -> PyResult<Bound<'_, PyAny>> {
    let grid = core::uniform_grid(p_min, p_max, steps).map_err(err)?;
    to_py(py, &core::bounds_table(d, &grid).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (d, p_min=0.0, p_max=1.0, steps=2000))]
fn composite_bound(d: usize, p_min: f64, p_max: f64, steps: usize) -> PyResult<Vec<(f64, f64)>> {
    let grid = core::uniform_grid(p_min, p_max, steps).map_err(err)?;
    Ok(core::composite_bound(d, &grid).map_err(err)?.samples)
}

fn report_to_py<'py>(py: Python<'py>, r: &OptimizationReport) -> PyResult<Bound<'py, PyAny>> {
    let rows: Vec<Vec<[f64; 2]>> = r
        .best_state
        .matrix()
        .row_iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect();
    to_py(
        py,
        &serde_json::json!({
            "best_value": r.best_value,
            "best_state": rows,
            "best_state_eigenvalues": r.best_state.eigenvalues(),
            "distance_to_maximally_mixed": r.distance_to_maximally_mixed,
            "value_at_maximally_mixed": r.value_at_maximally_mixed,
            "evaluations": r.iterations,
            "restarts": r.restarts,
            "converged": r.converged,
        }),
    )
}

/// A channel in Kraus form.
#[pyclass(name = "Channel", module = "flagcap", frozen)]
struct Channel {
    inner: KrausChannel,
}

impl Channel {
    fn wrap(inner: KrausChannel) -> Self {
        Self { inner }
    }

    fn state_or_mixed(&self, rho: Option<Vec<Vec<Complex64>>>) -> PyResult<DensityOperator> {
        match rho {
            Some(rows) => density(rows),
            None => Ok(DensityOperator::maximally_mixed(self.inner.in_dim())),
        }
    }
}

#[pymethods]
impl Channel {
    /// Flagged depolarizing channel; `c` defaults to the threshold `c(p)`.
    #[staticmethod]
    #[pyo3(signature = (d, p, c=None))]
    fn fdc(d: usize, p: f64, c: Option<f64>) -> PyResult<Self> {
        let params = match c {
            Some(c) => FdcParams::new(d, p, c),
            None => FdcParams::at_threshold(d, p),
        }
        .map_err(err)?;
        Ok(Self::wrap(core::make_fdc(&params).map_err(err)?))
    }

    #[staticmethod]
    fn pure_flag(d: usize, p: f64, theta: f64) -> PyResult<Self> {
        Ok(Self::wrap(core::make_pure_flag_fdc(d, p, theta).map_err(err)?))
    }

    #[staticmethod]
    fn depolarizing(d: usize, p: f64) -> PyResult<Self> {
        Ok(Self::wrap(core::make_depolarizing(d, p).map_err(err)?))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self::wrap(KrausChannel::from_json(text).map_err(err)?))
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    #[getter]
    fn in_dim(&self) -> usize {
        self.inner.in_dim()
    }

    #[getter]
    fn out_dims(&self) -> Vec<usize> {
        self.inner.out_dims()
    }

    fn kraus(&self) -> Vec<Vec<Vec<Complex64>>> {
        self.inner.kraus().iter().map(matrix_to_rows).collect()
    }

    fn apply(&self, rho: Vec<Vec<Complex64>>) -> PyResult<Vec<Vec<Complex64>>> {
        let out = self.inner.apply(&density(rho)?).map_err(err)?;
        Ok(matrix_to_rows(out.matrix()))
    }

    fn choi_eigenvalues(&self) -> Vec<f64> {
        self.inner.choi().eigenvalues()
    }

    #[pyo3(signature = (tol=1e-9))]
    fn is_cptp<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.cptp_report(tol))
    }

    fn complementary(&self) -> Self {
        Self::wrap(self.inner.complementary())
    }

    /// `next` applied after this channel.
    fn then(&self, next: &Channel) -> PyResult<Self> {
        Ok(Self::wrap(self.inner.then(&next.inner).map_err(err)?))
    }

    /// Evaluated at `rho`, or at the maximally mixed state when omitted.
    #[pyo3(signature = (rho=None))]
    fn coherent_information(&self, rho: Option<Vec<Vec<Complex64>>>) -> PyResult<f64> {
        core::coherent_information(&self.inner, &self.state_or_mixed(rho)?).map_err(err)
    }

    #[pyo3(signature = (rho=None))]
    fn mutual_information(&self, rho: Option<Vec<Vec<Complex64>>>) -> PyResult<f64> {
        core::mutual_information(&self.inner, &self.state_or_mixed(rho)?).map_err(err)
    }

    #[pyo3(signature = (restarts=core::certify::MIN_RESTARTS, seed=0))]
    fn maximize_coherent_info<'py>(
        &self,
        py: Python<'py>,
        restarts: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let r = py
            .detach(|| core::maximize_coherent_info(&self.inner, restarts, seed))
            .map_err(err)?;
        report_to_py(py, &r)
    }

    #[pyo3(signature = (restarts=core::certify::MIN_RESTARTS, seed=0))]
    fn maximize_mutual_info<'py>(
        &self,
        py: Python<'py>,
        restarts: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let r = py
            .detach(|| core::maximize_mutual_info(&self.inner, restarts, seed))
            .map_err(err)?;
        report_to_py(py, &r)
    }

    /// Largest covariance residual over `trials` random unitaries.
    #[pyo3(signature = (trials=20, seed=0))]
    fn verify_covariance(&self, trials: usize, seed: u64) -> PyResult<f64> {
        core::verify_covariance(&self.inner, trials, seed).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Channel(in_dim={}, out_dims={:?}, kraus={})",
            self.inner.in_dim(),
            self.inner.out_dims(),
            self.inner.kraus().len()
        )
    }
}

#[pymodule(name = "flagcap")]
fn flagcap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Channel>()?;
    m.add_function(wrap_pyfunction!(q_fdc, m)?)?;
    m.add_function(wrap_pyfunction!(c_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(q_lower, m)?)?;
    m.add_function(wrap_pyfunction!(f1_bound, m)?)?;
    m.add_function(wrap_pyfunction!(f2_bound, m)?)?;
    m.add_function(wrap_pyfunction!(q_pure_flag, m)?)?;
    m.add_function(wrap_pyfunction!(delta_gap, m)?)?;
    m.add_function(wrap_pyfunction!(t_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(c1_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(ce_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(degrading_params, m)?)?;
    m.add_function(wrap_pyfunction!(verify_degradability, m)?)?;
    m.add_function(wrap_pyfunction!(bounds_table, m)?)?;
    m.add_function(wrap_pyfunction!(composite_bound, m)?)?;
    Ok(())
}
