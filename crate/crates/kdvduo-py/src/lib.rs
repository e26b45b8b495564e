//! Python bindings.

use std::path::PathBuf;

use kdvduo::critical::{default_p_grid, enumerate_candidates, spectral_witness, IndexConvention};
use kdvduo::harness::{self, ExperimentConfig};
use kdvduo::hum::{observability_margin, solve_hum, ControlConfig, HumOptions};
use kdvduo::linear::{solve_adjoint, solve_forward_linear, AdjointMode};
use kdvduo::nonlinear::{control_nonlinear, solve_nonlinear, NonlinearControlOptions, PicardSettings};
use kdvduo::time_sobolev::{self, SobolevMode, SobolevSpec};
use kdvduo::{BoundaryData, Channel, Error, StatePair, Trajectory};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(kdvduo, NoConvergenceError, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NoConvergence { .. } => NoConvergenceError::new_err(e.to_string()),
        Error::Unstable { .. } | Error::SingularStep { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Coefficients a, b, c, r and the quadratic coefficients a1, a2.
#[pyclass(name = "SystemParams", from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: kdvduo::SystemParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (a, b, c, r, a1 = 0.0, a2 = 0.0))]
    fn new(a: f64, b: f64, c: f64, r: f64, a1: f64, a2: f64) -> PyResult<Self> {
        let inner = kdvduo::SystemParams::new(a, b, c, r).with_nonlinear(a1, a2);
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a
    }
    #[getter]
    fn b(&self) -> f64 {
        self.inner.b
    }
    #[getter]
    fn c(&self) -> f64 {
        self.inner.c
    }
    #[getter]
    fn r(&self) -> f64 {
        self.inner.r
    }
    #[getter]
    fn a1(&self) -> f64 {
        self.inner.a1
    }
    #[getter]
    fn a2(&self) -> f64 {
        self.inner.a2
    }

    /// 1 - a^2 b
    fn gap(&self) -> f64 {
        self.validated().gap()
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("SystemParams(a={}, b={}, c={}, r={}, a1={}, a2={})", p.a, p.b, p.c, p.r, p.a1, p.a2)
    }
}

impl PyParams {
    fn validated(&self) -> kdvduo::ValidatedParams {
        self.inner.validate().expect("validated on construction")
    }
}

/// Uniform grid with nx spatial nodes and nt time steps on [0, L] x [0, T].
#[pyclass(name = "Grid", from_py_object)]
#[derive(Clone)]
struct PyGrid {
    inner: kdvduo::Grid,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(length: f64, horizon: f64, nx: usize, nt: usize) -> PyResult<Self> {
        Ok(Self { inner: kdvduo::Grid::new(length, horizon, nx, nt).map_err(to_py)? })
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length
    }
    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon
    }
    #[getter]
    fn nx(&self) -> usize {
        self.inner.nx
    }
    #[getter]
    fn nt(&self) -> usize {
        self.inner.nt
    }

    fn nodes(&self) -> Vec<f64> {
        self.inner.nodes()
    }

    fn times(&self) -> Vec<f64> {
        self.inner.times()
    }

    fn __repr__(&self) -> String {
        let g = &self.inner;
        format!("Grid(L={}, T={}, nx={}, nt={})", g.length, g.horizon, g.nx, g.nt)
    }
}

fn state(u: Vec<f64>, v: Vec<f64>, nx: usize) -> PyResult<StatePair> {
    let s = StatePair::new(u, v);
    s.check(nx).map_err(to_py)?;
    Ok(s)
}

fn boundary(py_bd: Option<&Bound<'_, PyDict>>, nt: usize) -> PyResult<BoundaryData> {
    let mut bd = BoundaryData::zeros(nt);
    if let Some(d) = py_bd {
        for (k, v) in d.iter() {
            let name: String = k.extract()?;
            let ch = Channel::ALL
                .into_iter()
                .find(|c| c.name() == name)
                .ok_or_else(|| PyValueError::new_err(format!("unknown boundary channel {name:?}")))?;
            *bd.channel_mut(ch) = v.extract()?;
        }
    }
    bd.check(nt).map_err(to_py)?;
    Ok(bd)
}

fn boundary_dict<'py>(py: Python<'py>, bd: &BoundaryData) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for c in Channel::ALL {
        d.set_item(c.name(), bd.channel(c).clone())?;
    }
    Ok(d)
}

fn trajectory_dict<'py>(py: Python<'py>, t: &Trajectory) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("u", t.slices.iter().map(|s| s.u.clone()).collect::<Vec<_>>())?;
    d.set_item("v", t.slices.iter().map(|s| s.v.clone()).collect::<Vec<_>>())?;
    Ok(d)
}

fn control_config(name: &str) -> PyResult<ControlConfig> {
    name.parse().map_err(to_py)
}

/// Forward solve; returns {"u": [[..]], "v": [[..]]} indexed by time then space.
#[pyfunction]
#[pyo3(signature = (params, grid, u0, v0, boundary_data = None, picard_tol = None))]
fn simulate<'py>(
    py: Python<'py>,
    params: &PyParams,
    grid: &PyGrid,
    u0: Vec<f64>,
    v0: Vec<f64>,
    boundary_data: Option<&Bound<'py, PyDict>>,
    picard_tol: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let (p, g) = (params.validated(), grid.inner);
    let init = state(u0, v0, g.nx)?;
    let bd = boundary(boundary_data, g.nt)?;
    let nonlinear = p.a1 != 0.0 || p.a2 != 0.0;
    let traj = if nonlinear {
        let set = PicardSettings { tol: picard_tol.unwrap_or(1e-10), ..PicardSettings::default() };
        solve_nonlinear(&p, &g, &init, &bd, &set, None).map_err(to_py)?.trajectory
    } else {
        solve_forward_linear(&p, &g, &init, &bd, None).map_err(to_py)?.0
    };
    trajectory_dict(py, &traj)
}

/// Adjoint solve from final data; mode is "transpose" or "pde".
#[pyfunction]
#[pyo3(signature = (params, grid, u_final, v_final, mode = "transpose"))]
fn adjoint<'py>(
    py: Python<'py>,
    params: &PyParams,
    grid: &PyGrid,
    u_final: Vec<f64>,
    v_final: Vec<f64>,
    mode: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let g = grid.inner;
    let mode = match mode {
        "transpose" => AdjointMode::Transpose,
        "pde" => AdjointMode::Pde,
        m => return Err(PyValueError::new_err(format!("unknown adjoint mode {m:?}"))),
    };
    let fin = state(u_final, v_final, g.nx)?;
    let (traj, _) = solve_adjoint(&params.validated(), &g, &fin, mode).map_err(to_py)?;
    trajectory_dict(py, &traj)
}

/// Candidate critical lengths up to l_max, as a list of dicts.
#[pyfunction]
#[pyo3(signature = (params, l_max, include_zero = true))]
fn critical_lengths<'py>(py: Python<'py>, params: &PyParams, l_max: f64, include_zero: bool) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let conv = if include_zero { IndexConvention::WithZero } else { IndexConvention::Positive };
    let cands = enumerate_candidates(&params.validated(), l_max, conv).map_err(to_py)?;
    cands
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("length", c.length)?;
            d.set_item("alpha", c.alpha)?;
            d.set_item("index", c.index.0.to_vec())?;
            d.set_item("multiplicity", c.multiplicity)?;
            d.set_item("consistent", c.consistent)?;
            d.set_item("degenerate", c.degenerate)?;
            d.set_item("vieta_residuals", c.vieta_residuals.map(|r| r.to_vec()))?;
            Ok(d)
        })
        .collect()
}

/// Smallest singular value of the boundary matrix over a p grid: (p, sigma, min_sigma).
#[pyfunction]
#[pyo3(signature = (params, length, points_per_sign = 200))]
fn witness(params: &PyParams, length: f64, points_per_sign: usize) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
    let w = spectral_witness(&params.validated(), length, &default_p_grid(points_per_sign)).map_err(to_py)?;
    let (p, s) = w.lambda_scan.into_iter().unzip();
    Ok((p, s, w.min_sigma))
}

/// Smallest Gramian eigenvalue on the sine probe subspace.
#[pyfunction]
#[pyo3(signature = (params, grid, config = "FourControl", modes = 8))]
fn margin(params: &PyParams, grid: &PyGrid, config: &str, modes: usize) -> PyResult<f64> {
    observability_margin(&params.validated(), &grid.inner, control_config(config)?, modes).map_err(to_py)
}

/// HUM boundary control from (u0, v0) to (u_target, v_target).
#[pyfunction]
#[pyo3(signature = (params, grid, u0, v0, u_target, v_target, config = "FourControl", tol = 1e-3, maxit = 300))]
#[allow(clippy::too_many_arguments)]
fn control<'py>(
    py: Python<'py>,
    params: &PyParams,
    grid: &PyGrid,
    u0: Vec<f64>,
    v0: Vec<f64>,
    u_target: Vec<f64>,
    v_target: Vec<f64>,
    config: &str,
    tol: f64,
    maxit: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let (p, g) = (params.validated(), grid.inner);
    let init = state(u0, v0, g.nx)?;
    let target = state(u_target, v_target, g.nx)?;
    let cfg = control_config(config)?;
    let d = PyDict::new(py);
    if p.a1 != 0.0 || p.a2 != 0.0 {
        let opts = NonlinearControlOptions { hum: HumOptions { tol, maxit, ..HumOptions::default() }, ..Default::default() };
        let sol = control_nonlinear(&p, &g, cfg, &init, &target, &opts).map_err(to_py)?;
        d.set_item("controls", boundary_dict(py, &sol.controls)?)?;
        d.set_item("relative_terminal_error", sol.report.relative_terminal_error)?;
        d.set_item("outer_iterations", sol.report.outer_iterations)?;
        d.set_item("iterations", sol.report.hum_iterations.iter().sum::<usize>())?;
    } else {
        let opts = HumOptions { tol, maxit, ..HumOptions::default() };
        let sol = solve_hum(&p, &g, cfg, &init, &target, &opts).map_err(to_py)?;
        d.set_item("controls", boundary_dict(py, &sol.controls)?)?;
        d.set_item("relative_terminal_error", sol.report.relative_terminal_error)?;
        d.set_item("iterations", sol.report.cg_iterations)?;
        d.set_item("residuals", sol.report.cg_residual_history.clone())?;
    }
    Ok(d)
}

fn sobolev_spec(s: f64, horizon: f64, homogeneous: bool) -> PyResult<SobolevSpec> {
    let mode = if homogeneous { SobolevMode::Homogeneous } else { SobolevMode::Inhomogeneous };
    SobolevSpec::new(s, horizon, mode).map_err(to_py)
}

/// Discrete H^s(0, T) norm of a series sampled at nt + 1 equispaced times.
#[pyfunction]
#[pyo3(signature = (series, s, horizon, homogeneous = false))]
fn sobolev_norm(series: Vec<f64>, s: f64, horizon: f64, homogeneous: bool) -> PyResult<f64> {
    time_sobolev::sobolev_norm(&series, &sobolev_spec(s, horizon, homogeneous)?).map_err(to_py)
}

/// Fractional power of the periodic time Laplacian (or its shifted form).
#[pyfunction]
#[pyo3(signature = (series, sigma, horizon, homogeneous = false))]
fn time_operator(series: Vec<f64>, sigma: f64, horizon: f64, homogeneous: bool) -> PyResult<Vec<f64>> {
    let spec = sobolev_spec(sigma.abs().min(1.0), horizon, homogeneous)?;
    time_sobolev::fractional_time_operator(&series, sigma, &spec).map_err(to_py)
}

/// Runs a JSON-configured experiment; returns (exit code, metrics as JSON text).
#[pyfunction]
fn run_experiment(config_json: &str, out_dir: PathBuf) -> PyResult<(i32, String)> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(to_py)?;
    match harness::run(&cfg, &out_dir) {
        Ok((outcome, metrics)) => {
            let text = serde_json::to_string(&metrics).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
            Ok((outcome.exit_code(), text))
        }
        Err(e) => Err(to_py(e)),
    }
}

#[pymodule]
#[pyo3(name = "kdvduo")]
fn kdvduo_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyGrid>()?;
    m.add("NoConvergenceError", m.py().get_type::<NoConvergenceError>())?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(adjoint, m)?)?;
    m.add_function(wrap_pyfunction!(critical_lengths, m)?)?;
    m.add_function(wrap_pyfunction!(witness, m)?)?;
    m.add_function(wrap_pyfunction!(margin, m)?)?;
    m.add_function(wrap_pyfunction!(control, m)?)?;
    m.add_function(wrap_pyfunction!(sobolev_norm, m)?)?;
    m.add_function(wrap_pyfunction!(time_operator, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
