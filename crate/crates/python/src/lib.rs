//! Python bindings: the UW1/UW2 solvers, density construction, the 1D closed
//! form, and the preset runner, with plain lists and dicts at the boundary.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use uot_core::analysis;
use uot_core::densities::{make_density as core_make_density, DensitySpec};
use uot_core::grid::{Grid, SpatialField, SpatialGrid, TimeGrid};
use uot_core::runner::{self, RunConfig};
use uot_core::solver::{solve_uw2, SolverConfig};
use uot_core::uw1::{solve_uw1 as core_solve_uw1, uw1_closed_form_1d as core_closed_form};
use uot_core::Error;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Divergence { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn spatial_grid(n_x: usize, n_y: Option<usize>) -> PyResult<SpatialGrid> {
    match n_y {
        Some(n_y) => SpatialGrid::square(n_x, n_y).map_err(to_py_err),
        None => SpatialGrid::line(n_x).map_err(to_py_err),
    }
}

fn field(space: &SpatialGrid, values: Vec<f64>) -> PyResult<SpatialField> {
    SpatialField::from_values(space, values).map_err(to_py_err)
}

/// Largest real root of a x^3 + b x^2 + c x + d.
#[pyfunction]
fn root_plus(a: f64, b: f64, c: f64, d: f64) -> PyResult<f64> {
    uot_core::cubic::root_plus(a, b, c, d).map_err(to_py_err)
}

/// Build a density from a JSON spec (same schema as the CLI config's mu0/mu1)
/// on an n_x (by n_y) grid; returns the cell values row-major.
#[pyfunction]
#[pyo3(signature = (spec, n_x, n_y=None))]
fn make_density(spec: &str, n_x: usize, n_y: Option<usize>) -> PyResult<Vec<f64>> {
    let spec: DensitySpec =
        serde_json::from_str(spec).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let space = spatial_grid(n_x, n_y)?;
    Ok(core_make_density(&spec, &space).map_err(to_py_err)?.values().to_vec())
}

/// Explicit 1D UW1 value from cumulative mass functions.
#[pyfunction]
fn uw1_closed_form_1d(mu0: Vec<f64>, mu1: Vec<f64>, alpha: f64) -> PyResult<f64> {
    let space = spatial_grid(mu0.len(), None)?;
    let mu0 = field(&space, mu0)?;
    let mu1 = field(&space, mu1)?;
    core_closed_form(&mu0, &mu1, alpha, &space).map_err(to_py_err)
}

/// Dynamic UW2 solve. Densities are row-major cell values on the n_x (by n_y)
/// grid; returns a dict with the objective, the metric value, diagnostics and
/// the final fields.
#[pyfunction]
#[pyo3(signature = (mu0, mu1, n_x, n_t, alpha=100.0, n_y=None, tau1=1e-3, tau2=1e-1,
                    iterations=200_000, tolerance=1e-6, report_every=1000, freeze_source=false))]
#[allow(clippy::too_many_arguments)]
fn solve_uw2_py(
    py: Python<'_>,
    mu0: Vec<f64>,
    mu1: Vec<f64>,
    n_x: usize,
    n_t: usize,
    alpha: f64,
    n_y: Option<usize>,
    tau1: f64,
    tau2: f64,
    iterations: usize,
    tolerance: f64,
    report_every: usize,
    freeze_source: bool,
) -> PyResult<Py<PyDict>> {
    let space = spatial_grid(n_x, n_y)?;
    let grid = Grid::new(space, TimeGrid::new(n_t).map_err(to_py_err)?);
    let mu0 = field(&space, mu0)?;
    let mu1 = field(&space, mu1)?;
    let cfg = SolverConfig {
        p: 2,
        alpha,
        tau1,
        tau2,
        max_iterations: iterations,
        tolerance,
        report_every,
        freeze_source,
    };
    let sol = solve_uw2(&mu0, &mu1, &cfg, &grid).map_err(to_py_err)?;
    let diag = analysis::diagnostics(&sol.state, &mu0, &mu1, &cfg, &grid);
    let out = PyDict::new(py);
    out.set_item("objective", sol.objective)?;
    out.set_item("uw2", sol.uw2)?;
    out.set_item("dual", diag.dual)?;
    out.set_item("gap", diag.gap)?;
    out.set_item("continuity_residual", diag.continuity_residual)?;
    out.set_item("hj_violation", diag.hj.max_violation)?;
    out.set_item("hj_support_error", diag.hj.max_support_error)?;
    out.set_item("mass_error_f", diag.mass_error_f)?;
    out.set_item("mass_error_phi", diag.mass_error_phi)?;
    out.set_item(
        "pushforward_residual",
        diag.pushforward.map(|p| p.l1),
    )?;
    out.set_item("converged", sol.converged)?;
    out.set_item("iterations_run", sol.iterations_run)?;
    let n_t = grid.time.n_t();
    let mu: Vec<Vec<f64>> = (0..n_t).map(|k| sol.state.mu.slice(k).to_vec()).collect();
    let phi: Vec<Vec<f64>> = (0..n_t).map(|k| sol.state.phi.slice(k).to_vec()).collect();
    out.set_item("mu", mu)?;
    out.set_item("phi", phi)?;
    out.set_item("f", sol.state.f.values().to_vec())?;
    Ok(out.into())
}

/// Minimal-flux UW1 solve; returns a dict with the value, the flux components
/// and the constraint residual.
#[pyfunction]
#[pyo3(signature = (mu0, mu1, n_x, alpha=100.0, n_y=None, iterations=200_000,
                    tolerance=1e-8, report_every=200))]
#[allow(clippy::too_many_arguments)]
fn solve_uw1_py(
    py: Python<'_>,
    mu0: Vec<f64>,
    mu1: Vec<f64>,
    n_x: usize,
    alpha: f64,
    n_y: Option<usize>,
    iterations: usize,
    tolerance: f64,
    report_every: usize,
) -> PyResult<Py<PyDict>> {
    let space = spatial_grid(n_x, n_y)?;
    let mu0 = field(&space, mu0)?;
    let mu1 = field(&space, mu1)?;
    let step = SolverConfig::uw1_default_step(&space);
    let cfg = SolverConfig {
        p: 1,
        alpha,
        tau1: step,
        tau2: step,
        max_iterations: iterations,
        tolerance,
        report_every,
        freeze_source: false,
    };
    let sol = core_solve_uw1(&mu0, &mu1, &cfg, &space).map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("value", sol.value)?;
    out.set_item("source_constant", sol.source_constant)?;
    out.set_item("residual", sol.residual)?;
    out.set_item("converged", sol.converged)?;
    out.set_item("iterations_run", sol.iterations_run)?;
    out.set_item("flux_x", sol.flux.x_values().to_vec())?;
    out.set_item("flux_y", sol.flux.y_values().to_vec())?;
    out.set_item("potential", sol.potential.values().to_vec())?;
    Ok(out.into())
}

/// Run a named preset (exp1 ... exp5) into `out_dir`; returns the summary dict.
#[pyfunction]
fn run_preset(py: Python<'_>, name: &str, out_dir: &str) -> PyResult<Py<PyDict>> {
    let mut config = RunConfig::preset(name).map_err(to_py_err)?;
    config.out_dir = out_dir.into();
    let outputs = runner::run(&config).map_err(to_py_err)?;
    let out = PyDict::new(py);
    for o in &outputs {
        let entry = PyDict::new(py);
        entry.set_item("objective", o.summary.objective)?;
        entry.set_item("uw1", o.summary.uw1)?;
        entry.set_item("uw2", o.summary.uw2)?;
        entry.set_item("gap", o.summary.gap)?;
        entry.set_item("converged", o.summary.converged)?;
        entry.set_item("iterations_run", o.summary.iterations_run)?;
        out.set_item(o.directory.to_string_lossy(), entry)?;
    }
    Ok(out.into())
}

#[pymodule]
fn uot_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(root_plus, m)?)?;
    m.add_function(wrap_pyfunction!(make_density, m)?)?;
    m.add_function(wrap_pyfunction!(uw1_closed_form_1d, m)?)?;
    m.add("solve_uw2", wrap_pyfunction!(solve_uw2_py, m)?)?;
    m.add("solve_uw1", wrap_pyfunction!(solve_uw1_py, m)?)?;
    m.add_function(wrap_pyfunction!(run_preset, m)?)?;
    Ok(())
}
