use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use frachh_core::experiment::{self, Campaign, ExperimentConfig, RunOptions};
use frachh_core::fbm::{self, HurstParameter, TimeGrid};
use frachh_core::spectral::{self, kernel, Field, SpatialGrid};
use frachh_core::{hardy, noise, wellposedness as wp};

fn err(e: frachh_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn hurst(h: f64) -> PyResult<HurstParameter> {
    HurstParameter::new(h).map_err(err)
}

fn from_json<'py>(py: Python<'py>, value: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (value.to_string(),))
}

/// Model tuple `(N, theta, gamma, p, q, H)` with noise amplitude `mu`.
#[pyclass(name = "ModelParams", from_py_object)]
#[derive(Clone)]
struct PyModelParams {
    inner: wp::ModelParams,
}

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (dim, theta, gamma, p, q, hurst, mu = 1.0))]
    fn new(dim: usize, theta: f64, gamma: f64, p: f64, q: f64, hurst: f64, mu: f64) -> Self {
        Self { inner: wp::ModelParams { dim, theta, gamma, p, q, hurst, mu } }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }
    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }
    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }
    #[getter]
    fn p(&self) -> f64 {
        self.inner.p
    }
    #[getter]
    fn q(&self) -> f64 {
        self.inner.q
    }
    #[getter]
    fn hurst(&self) -> f64 {
        self.inner.hurst
    }
    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }

    /// Dict with `accepted`, `reasons` and, when accepted, `exponents`
    /// (floats) and `exact` (rational strings).
    fn check_admissible<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let exact = wp::ExactParams::from_params(&self.inner).map_err(err)?;
        let verdict = wp::check_admissible_exact(&exact);
        let out = PyDict::new(py);
        out.set_item("accepted", verdict.is_accepted())?;
        out.set_item("reasons", verdict.reasons().to_vec())?;
        if let Some(e) = verdict.exponents() {
            let floats = serde_json::to_value(e.to_f64()).map_err(|e| PyValueError::new_err(e.to_string()))?;
            out.set_item("exponents", from_json(py, &floats)?)?;
            let s = PyDict::new(py);
            s.set_item("r", wp::format_ratio(&e.r))?;
            s.set_item("sigma", wp::format_ratio(&e.sigma))?;
            s.set_item("a", wp::format_ratio(&e.a))?;
            s.set_item("b", wp::format_ratio(&e.b))?;
            s.set_item("third_condition", wp::format_ratio(&e.third_condition))?;
            out.set_item("exact", s)?;
        }
        Ok(out)
    }

    fn __repr__(&self) -> String {
        let m = &self.inner;
        format!(
            "ModelParams(dim={}, theta={}, gamma={}, p={}, q={}, hurst={}, mu={})",
            m.dim, m.theta, m.gamma, m.p, m.q, m.hurst, m.mu
        )
    }
}

/// Periodic grid on `[-L, L)^N` with `n` points per axis.
#[pyclass(name = "SpatialGrid", from_py_object)]
#[derive(Clone)]
struct PySpatialGrid {
    inner: SpatialGrid,
}

#[pymethods]
impl PySpatialGrid {
    #[new]
    fn new(dim: usize, half_period: f64, points: usize) -> PyResult<Self> {
        Ok(Self { inner: SpatialGrid::new(dim, half_period, points).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    #[getter]
    fn half_period(&self) -> f64 {
        self.inner.half_period()
    }
    #[getter]
    fn points(&self) -> usize {
        self.inner.points()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Flat list of grid points, each `[x, y, z]` truncated to `dim`.
    fn coordinates(&self) -> Vec<Vec<f64>> {
        let d = self.inner.dim();
        (0..self.inner.len()).map(|i| self.inner.point(i)[..d].to_vec()).collect()
    }

    /// `e^{-tA}` applied to the flat array `values`.
    fn semigroup(&self, values: Vec<f64>, t: f64, theta: f64) -> PyResult<Vec<f64>> {
        let u = Field::new(self.inner, values).map_err(err)?;
        Ok(spectral::apply_semigroup(&u, t, theta).map_err(err)?.into_values())
    }

    /// `|x|^{-gamma} |u|^{p-1} u` on the grid.
    fn nonlinearity(&self, values: Vec<f64>, p: f64, gamma: f64) -> PyResult<Vec<f64>> {
        let u = Field::new(self.inner, values).map_err(err)?;
        let w = hardy::build_hardy_weight(self.inner, gamma).map_err(err)?;
        Ok(hardy::nonlinearity(&u, p, &w).map_err(err)?.into_values())
    }

    /// Discrete `L^q` norm; `q = float("inf")` gives the maximum.
    fn norm(&self, values: Vec<f64>, q: f64) -> PyResult<f64> {
        let u = Field::new(self.inner, values).map_err(err)?;
        spectral::lebesgue_norm(&u, q).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "SpatialGrid(dim={}, half_period={}, points={})",
            self.inner.dim(),
            self.inner.half_period(),
            self.inner.points()
        )
    }
}

#[pyfunction]
fn c_h(h: f64) -> PyResult<f64> {
    Ok(fbm::c_h(hurst(h)?))
}

#[pyfunction]
fn fbm_covariance(s: f64, t: f64, h: f64) -> PyResult<f64> {
    fbm::fbm_covariance(s, t, hurst(h)?).map_err(err)
}

#[pyfunction]
fn volterra_kernel(t: f64, s: f64, h: f64) -> PyResult<f64> {
    fbm::volterra_kernel(t, s, hurst(h)?).map_err(err)
}

/// Returns `(nodes, values)` of one fBm path on the uniform grid.
#[pyfunction]
#[pyo3(signature = (h, horizon, steps, seed, method = "cholesky"))]
fn sample_fbm(h: f64, horizon: f64, steps: usize, seed: u64, method: &str) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let grid = TimeGrid::new(horizon, steps).map_err(err)?;
    let path = match method {
        "cholesky" => fbm::sample_fbm_cholesky(grid, hurst(h)?, seed),
        "volterra" => fbm::sample_fbm_volterra(grid, hurst(h)?, seed),
        other => return Err(PyValueError::new_err(format!("unknown method '{other}'"))),
    }
    .map_err(err)?;
    Ok((grid.nodes(), path.values))
}

#[pyfunction]
fn mode_convolution_covariance(lam: f64, t: f64, t_prime: f64, h: f64) -> PyResult<f64> {
    noise::mode_convolution_covariance(lam, t, t_prime, hurst(h)?).map_err(err)
}

#[pyfunction]
fn eval_ktheta(x: Vec<f64>, theta: f64) -> PyResult<f64> {
    kernel::eval_ktheta(&x, theta).map_err(err)
}

#[pyfunction]
fn kappa_m(m: u32) -> PyResult<f64> {
    kernel::kappa_m(m).map_err(err)
}

#[pyfunction]
fn smoothing_constant(theta: f64, dim: usize) -> PyResult<f64> {
    kernel::smoothing_constant(theta, dim).map_err(err)
}

#[pyfunction]
fn beta_function(a: f64, b: f64) -> PyResult<f64> {
    wp::beta_function(a, b).map_err(err)
}

/// Runs a campaign with a JSON config string and returns the manifest summary.
#[pyfunction]
#[pyo3(signature = (campaign, config, out, seed = None, override_admissibility = false))]
fn run_experiment<'py>(
    py: Python<'py>,
    campaign: &str,
    config: &str,
    out: PathBuf,
    seed: Option<u64>,
    override_admissibility: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let campaign: Campaign = campaign
        .parse()
        .map_err(|_| PyValueError::new_err(format!("unknown campaign '{campaign}'")))?;
    let cfg = ExperimentConfig::from_json(config).map_err(err)?;
    let opts = RunOptions { seed, override_admissibility };
    let manifest = py
        .detach(|| experiment::run_experiment(campaign, &cfg, &out, &opts))
        .map_err(err)?;
    from_json(py, &manifest.summary)
}

#[pymodule]
fn frachh(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelParams>()?;
    m.add_class::<PySpatialGrid>()?;
    m.add_function(wrap_pyfunction!(c_h, m)?)?;
    m.add_function(wrap_pyfunction!(fbm_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(volterra_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(sample_fbm, m)?)?;
    m.add_function(wrap_pyfunction!(mode_convolution_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(eval_ktheta, m)?)?;
    m.add_function(wrap_pyfunction!(kappa_m, m)?)?;
    m.add_function(wrap_pyfunction!(smoothing_constant, m)?)?;
    m.add_function(wrap_pyfunction!(beta_function, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
