//! Python bindings: networks, wind models, the full solve and plain power flow.
//!
//! Structured results cross the boundary as JSON and come back as Python
//! dicts, so the Python side sees the same schema the command line writes.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use windopf::driver::{solve_wind_opf, InitMode, SocaSolution, SolveOptions, SolveStatus};
use windopf::netmodel::{parse_matpower_case, PowerNetwork, WindFarm};
use windopf::pf::{newton_raphson, VoltageState};
use windopf::windcost::{fit_gmm_em, shortage_surplus_cost, EmOptions, GmmModel};

fn to_py(e: windopf::Error) -> PyErr {
    match e {
        windopf::Error::Numerical(_) | windopf::Error::Assembly(_) | windopf::Error::CutGeneration { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// A power network in per-unit form.
#[pyclass(name = "Network", module = "windopf", skip_from_py_object)]
#[derive(Clone)]
struct PyNetwork {
    inner: PowerNetwork,
}

#[pymethods]
impl PyNetwork {
    #[staticmethod]
    fn from_matpower(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
        Self::from_matpower_text(&text)
    }

    #[staticmethod]
    fn from_matpower_text(text: &str) -> PyResult<Self> {
        Ok(PyNetwork { inner: parse_matpower_case(text).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyNetwork { inner: PowerNetwork::from_json(text).map_err(to_py)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[getter]
    fn n_buses(&self) -> usize {
        self.inner.n_buses()
    }

    #[getter]
    fn n_branches(&self) -> usize {
        self.inner.n_branches()
    }

    #[getter]
    fn n_generators(&self) -> usize {
        self.inner.generators().len()
    }

    #[getter]
    fn n_wind_farms(&self) -> usize {
        self.inner.wind_farms().len()
    }

    #[getter]
    fn base_mva(&self) -> f64 {
        self.inner.base_mva()
    }

    /// Total active and reactive load in p.u.
    fn total_load(&self) -> (f64, f64) {
        self.inner.total_load()
    }

    fn with_load_scale(&self, factor: f64) -> Self {
        PyNetwork { inner: self.inner.with_load_scale(factor) }
    }

    /// Returns a copy with one more wind farm attached.
    #[pyo3(signature = (bus, gmm, k_l, k_h, power_factor=1.0, capacity_mw=None, pwl_segments=16))]
    #[allow(clippy::too_many_arguments)]
    fn with_wind_farm(
        &self,
        bus: usize,
        gmm: &PyGmm,
        k_l: f64,
        k_h: f64,
        power_factor: f64,
        capacity_mw: Option<f64>,
        pwl_segments: usize,
    ) -> PyResult<Self> {
        let mut farms = self.inner.wind_farms().to_vec();
        farms.push(WindFarm {
            bus,
            p_min_mw: 0.0,
            p_max_mw: capacity_mw.unwrap_or(gmm.inner.support_max),
            power_factor,
            k_l,
            k_h,
            gmm: gmm.inner.clone(),
            pwl_segments,
        });
        Ok(PyNetwork { inner: self.inner.with_wind_farms(farms).map_err(to_py)? })
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(buses={}, branches={}, generators={}, wind_farms={})",
            self.inner.n_buses(),
            self.inner.n_branches(),
            self.inner.generators().len(),
            self.inner.wind_farms().len()
        )
    }
}

/// Gaussian mixture density of wind output (MW).
#[pyclass(name = "GmmModel", module = "windopf", skip_from_py_object)]
#[derive(Clone)]
struct PyGmm {
    inner: GmmModel,
}

#[pymethods]
impl PyGmm {
    #[new]
    fn new(weights: Vec<f64>, means: Vec<f64>, stddevs: Vec<f64>, support_max: f64) -> PyResult<Self> {
        Ok(PyGmm { inner: GmmModel::new(weights, means, stddevs, support_max).map_err(to_py)? })
    }

    /// Fits `k` components by EM; deterministic for a given seed.
    #[staticmethod]
    #[pyo3(signature = (samples, k, seed=42, max_iter=500, support_max=None))]
    fn fit(samples: Vec<f64>, k: usize, seed: u64, max_iter: usize, support_max: Option<f64>) -> PyResult<Self> {
        let opts = EmOptions { seed, max_iter, support_max, ..EmOptions::default() };
        Ok(PyGmm { inner: fit_gmm_em(&samples, k, &opts).map_err(to_py)?.model })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyGmm { inner: GmmModel::from_json(text).map_err(to_py)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.clone()
    }

    #[getter]
    fn means(&self) -> Vec<f64> {
        self.inner.means.clone()
    }

    #[getter]
    fn stddevs(&self) -> Vec<f64> {
        self.inner.stddevs.clone()
    }

    #[getter]
    fn support_max(&self) -> f64 {
        self.inner.support_max
    }

    fn pdf(&self, x: f64) -> f64 {
        self.inner.pdf(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf(x)
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn __len__(&self) -> usize {
        self.inner.k()
    }
}

/// Result of [`solve`].
#[pyclass(name = "Solution", module = "windopf")]
struct PySolution {
    inner: SocaSolution,
}

#[pymethods]
impl PySolution {
    /// One of `converged`, `not_converged`, `infeasible`, `solver_failure`.
    #[getter]
    fn status(&self) -> &'static str {
        match self.inner.status {
            SolveStatus::Converged => "converged",
            SolveStatus::NotConverged => "not_converged",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::SolverFailure => "solver_failure",
        }
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective
    }

    #[getter]
    fn fossil_cost(&self) -> f64 {
        self.inner.fossil_cost
    }

    #[getter]
    fn wind_cost(&self) -> f64 {
        self.inner.wind_cost
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations()
    }

    /// Scheduled wind output per farm (MW).
    #[getter]
    fn wind_mw(&self) -> Vec<f64> {
        self.inner.wind.iter().map(|w| w.p_mw).collect()
    }

    /// Voltage magnitudes of the restored AC solution.
    #[getter]
    fn v(&self) -> Option<Vec<f64>> {
        self.inner.restored.as_ref().map(|r| r.state.v.clone())
    }

    #[getter]
    fn theta(&self) -> Option<Vec<f64>> {
        self.inner.restored.as_ref().map(|r| r.state.theta.clone())
    }

    /// Generator `(P, Q)` of the approximate dispatch (p.u.).
    #[getter]
    fn dispatch(&self) -> Option<Vec<(f64, f64)>> {
        self.inner.dispatch.as_ref().map(|d| d.gen.clone())
    }

    /// Error summary as a dict, or None when no report was produced.
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyAny>>> {
        match &self.inner.report {
            Some(r) => Ok(Some(json_to_py(py, &r.summary_json().map_err(to_py)?)?)),
            None => Ok(None),
        }
    }

    fn trace<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.trace.to_json().map_err(to_py)?)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Solution(status={}, objective={:.6}, iterations={})", self.status(), self.inner.objective, self.iterations())
    }
}

/// Runs the approximate OPF with rolling cuts and restores AC feasibility.
#[pyfunction]
#[pyo3(signature = (network, tol_gap=1e-4, tol_gamma=1e-3, max_iter=10, segments=16, init="flat"))]
fn solve(network: &PyNetwork, tol_gap: f64, tol_gamma: f64, max_iter: usize, segments: usize, init: &str) -> PyResult<PySolution> {
    let init = match init {
        "flat" => InitMode::Flat,
        "dcopf" | "dc_opf" => InitMode::DcOpf,
        other => return Err(PyValueError::new_err(format!("init must be 'flat' or 'dcopf', got '{other}'"))),
    };
    let opts = SolveOptions { init, tol_gap, tol_gamma, max_outer_iterations: max_iter, segments, ..SolveOptions::default() };
    Ok(PySolution { inner: solve_wind_opf(&network.inner, &opts).map_err(to_py)? })
}

/// Newton-Raphson power flow at the stored dispatch from a flat start.
#[pyfunction]
#[pyo3(signature = (network, tol=1e-8, max_iter=30))]
fn power_flow<'py>(py: Python<'py>, network: &PyNetwork, tol: f64, max_iter: usize) -> PyResult<Bound<'py, PyDict>> {
    let net = &network.inner;
    let sol = newton_raphson(net, &VoltageState::flat(net.n_buses()), tol, max_iter).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("converged", sol.converged)?;
    d.set_item("iterations", sol.iterations)?;
    d.set_item("max_mismatch", sol.max_mismatch)?;
    d.set_item("v", sol.state.v)?;
    d.set_item("theta", sol.state.theta)?;
    Ok(d)
}

/// Expected shortage and surplus cost of scheduling `p_schedule` MW.
#[pyfunction]
fn wind_cost<'py>(py: Python<'py>, gmm: &PyGmm, p_schedule: f64, k_l: f64, k_h: f64) -> PyResult<Bound<'py, PyDict>> {
    let c = shortage_surplus_cost(&gmm.inner, p_schedule, k_l, k_h, gmm.inner.support_max);
    let d = PyDict::new(py);
    d.set_item("p_schedule", c.p_schedule)?;
    d.set_item("shortage", c.f_l)?;
    d.set_item("surplus", c.f_h)?;
    d.set_item("total", c.total)?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "windopf")]
fn windopf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyGmm>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(power_flow, m)?)?;
    m.add_function(wrap_pyfunction!(wind_cost, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
