//! Python bindings for the `spincat` crate.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use spincat::dicke::{self, DickeSpace, StateVector};
use spincat::scenario::{self, ScenarioConfig, ScenarioError};
use spincat::wigner::{self, GridSpec, HalfInt, MultipoleBasis};

fn to_py(e: ScenarioError) -> PyErr {
    match e {
        ScenarioError::Config(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(format!("{} (exit code {})", e, e.exit_code())),
    }
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn space(n_atoms: usize) -> PyResult<DickeSpace> {
    DickeSpace::new(n_atoms).map_err(value_err)
}

/// τ = tan(β/2)·e^{−iφ}, with β measured from the ground pole.
#[pyfunction]
fn tau_from_angles(beta: f64, phi: f64) -> PyResult<Complex64> {
    dicke::tau_from_angles(beta, phi).map_err(value_err)
}

/// Amplitudes of |τ⟩ in the Dicke basis, index 0 ↔ m = −N/2.
#[pyfunction]
fn coherent_state(n_atoms: usize, tau: Complex64) -> PyResult<Vec<Complex64>> {
    let psi = dicke::coherent_state(space(n_atoms)?, tau).map_err(value_err)?;
    Ok(psi.0.iter().copied().collect())
}

#[pyfunction]
fn cat_state(n_atoms: usize, tau1: Complex64, tau2: Complex64) -> PyResult<Vec<Complex64>> {
    let psi = dicke::cat_state(space(n_atoms)?, tau1, tau2).map_err(value_err)?;
    Ok(psi.0.iter().copied().collect())
}

/// Vertices A, B, C, D of the tetrahedron as τ values.
#[pyfunction]
fn tetrahedron_taus() -> Vec<Complex64> {
    dicke::tetrahedron_taus().to_vec()
}

#[pyfunction]
fn clebsch_gordan(j1: f64, m1: f64, j2: f64, m2: f64, j: f64, m: f64) -> PyResult<f64> {
    let h = |x: f64| HalfInt::from_f64(x).map_err(value_err);
    Ok(wigner::clebsch_gordan(h(j1)?, h(m1)?, h(j2)?, h(m2)?, h(j)?, h(m)?))
}

#[pyfunction]
fn spherical_harmonic(k: usize, q: i64, theta: f64, phi: f64) -> PyResult<Complex64> {
    if q.unsigned_abs() as usize > k {
        return Err(PyValueError::new_err("|q| must not exceed k"));
    }
    Ok(wigner::spherical_harmonic(k, q, theta, phi))
}

/// Wigner function of a pure state on a uniform (θ, φ) grid. Returns a dict
/// with `thetas`, `phis` and `values` (one row per θ).
#[pyfunction]
#[pyo3(signature = (state, n_theta=181, n_phi=181))]
fn wigner_pure<'py>(py: Python<'py>, state: Vec<Complex64>, n_theta: usize, n_phi: usize) -> PyResult<Bound<'py, PyDict>> {
    if state.is_empty() {
        return Err(PyValueError::new_err("state must not be empty"));
    }
    let sp = space(state.len() - 1)?;
    let rho = dicke::density_from_state(&StateVector(state.into()));
    let grid = wigner::wigner_function(&rho, &MultipoleBasis::new(sp), GridSpec::Uniform { n_theta, n_phi })
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let rows: Vec<Vec<f64>> = grid.values.chunks(n_phi).map(<[f64]>::to_vec).collect();
    let out = PyDict::new(py);
    out.set_item("thetas", grid.thetas)?;
    out.set_item("phis", grid.phis)?;
    out.set_item("values", rows)?;
    Ok(out)
}

/// Runs a two-cat configuration (TOML text) in memory and returns the
/// observable series as lists.
#[pyfunction]
#[pyo3(signature = (config, overrides=Vec::new()))]
fn simulate_two_cat<'py>(py: Python<'py>, config: &str, overrides: Vec<String>) -> PyResult<Bound<'py, PyDict>> {
    let cfg = ScenarioConfig::from_toml_with_overrides(config, &overrides).map_err(to_py)?;
    cfg.validate().map_err(to_py)?;
    let (series, stats) = py.detach(|| scenario::simulate_two_cat(&cfg)).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("t", series.times)?;
    out.set_item("s_lin", series.s_lin)?;
    out.set_item("energy", series.energy)?;
    out.set_item("distance", series.distance_to_classical)?;
    out.set_item("distance_evolved", series.distance_to_evolved)?;
    out.set_item("steps", stats.accepted_steps)?;
    Ok(out)
}

/// Runs any scenario and writes its outputs; returns the output directory.
#[pyfunction]
#[pyo3(signature = (config, overrides=Vec::new()))]
fn run_scenario(py: Python<'_>, config: &str, overrides: Vec<String>) -> PyResult<String> {
    let cfg = ScenarioConfig::from_toml_with_overrides(config, &overrides).map_err(to_py)?;
    let report = py.detach(|| scenario::run_scenario(&cfg)).map_err(to_py)?;
    Ok(report.out_dir.display().to_string())
}

#[pymodule]
fn spincat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(tau_from_angles, m)?)?;
    m.add_function(wrap_pyfunction!(coherent_state, m)?)?;
    m.add_function(wrap_pyfunction!(cat_state, m)?)?;
    m.add_function(wrap_pyfunction!(tetrahedron_taus, m)?)?;
    m.add_function(wrap_pyfunction!(clebsch_gordan, m)?)?;
    m.add_function(wrap_pyfunction!(spherical_harmonic, m)?)?;
    m.add_function(wrap_pyfunction!(wigner_pure, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_two_cat, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
