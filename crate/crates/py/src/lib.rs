//! Python bindings: the main state/model types and the simulation,
//! rigid-impact, sweep and singularity operations.
//!
//! Structured reports (two-fold, manifold) cross the boundary as JSON
//! strings so Python can `json.loads` them without a schema dependency.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use spinbounce::filippov::{simulate_bounce, EventKind, IntegratorConfig, Trajectory};
use spinbounce::rigid::{classify_rigid_case, impulse_trace_oracle, rigid_bounce, RigidParams};
use spinbounce::singularity::{locate_two_fold, nu_product_asymptotic, two_fold_report, two_fold_seed};
use spinbounce::state::BallState;
use spinbounce::surface::{catalog_model, KelvinVoigtParams, SurfaceModel};
use spinbounce::sweep::{
    find_spin_reversal_manifold, omega_family, perturbation_experiment, sweep_ics, Grid1,
    SweepGrid,
};
use spinbounce::units::UnitSystem;
use spinbounce::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Parse(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Planar ball state `[x, x', y, y', omega]`.
#[pyclass(name = "BallState", skip_from_py_object)]
#[derive(Clone)]
struct PyBallState {
    inner: BallState,
}

#[pymethods]
impl PyBallState {
    #[new]
    #[pyo3(signature = (x=0.0, xdot=0.0, y=0.0, ydot=0.0, omega=0.0))]
    fn new(x: f64, xdot: f64, y: f64, ydot: f64, omega: f64) -> Self {
        Self { inner: BallState::new(x, xdot, y, ydot, omega) }
    }

    #[getter]
    fn x(&self) -> f64 {
        self.inner.x
    }
    #[getter]
    fn xdot(&self) -> f64 {
        self.inner.x_dot
    }
    #[getter]
    fn y(&self) -> f64 {
        self.inner.y
    }
    #[getter]
    fn ydot(&self) -> f64 {
        self.inner.y_dot
    }
    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega
    }

    /// Contact-point tangential velocity H = x' + omega.
    fn slip_velocity(&self) -> f64 {
        self.inner.slip_velocity()
    }

    fn as_tuple(&self) -> (f64, f64, f64, f64, f64) {
        let a = self.inner.as_array();
        (a[0], a[1], a[2], a[3], a[4])
    }

    fn __repr__(&self) -> String {
        let p = self.inner;
        format!(
            "BallState(x={}, xdot={}, y={}, ydot={}, omega={})",
            p.x, p.x_dot, p.y, p.y_dot, p.omega
        )
    }
}

/// A contact-force model: calibrated Kelvin-Voigt by default, any catalog
/// entry by name, or explicit Kelvin-Voigt parameters.
#[pyclass(name = "Model", skip_from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: SurfaceModel,
}

#[pymethods]
impl PyModel {
    /// Look a model up in the built-in catalog ("kv", "kv-depth-stiffening").
    #[staticmethod]
    fn catalog(name: &str) -> PyResult<Self> {
        Ok(Self { inner: catalog_model(name).map_err(err)? })
    }

    /// Explicit Kelvin-Voigt surface.
    #[staticmethod]
    #[pyo3(signature = (d1, d2, eta, eps2, mu, g=1.0))]
    fn kelvin_voigt(d1: f64, d2: f64, eta: f64, eps2: f64, mu: f64, g: f64) -> PyResult<Self> {
        let params = KelvinVoigtParams { d1, d2, eta, eps2, mu, g };
        Ok(Self { inner: SurfaceModel::kelvin_voigt(params).map_err(err)? })
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu()
    }

    /// Normal contact force at a state (negative means out of contact).
    fn normal_force(&self, state: &PyBallState) -> f64 {
        self.inner.normal_force(&state.inner)
    }
}

/// A simulated contact interval.
#[pyclass(name = "Trajectory")]
struct PyTrajectory {
    inner: Trajectory,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn num_samples(&self) -> usize {
        self.inner.samples.len()
    }

    fn final_state(&self) -> PyBallState {
        PyBallState { inner: self.inner.final_state() }
    }

    fn final_slip_velocity(&self) -> f64 {
        self.inner.final_slip_velocity()
    }

    fn contains_roll(&self) -> bool {
        self.inner.contains_roll()
    }

    /// Ordered phase names, consecutive duplicates collapsed.
    fn phases(&self) -> Vec<String> {
        self.inner.phase_sequence().iter().map(|p| p.as_str().to_string()).collect()
    }

    /// Events as (kind, tau, state) triples.
    fn events(&self) -> Vec<(String, f64, PyBallState)> {
        self.inner
            .events
            .iter()
            .map(|e| {
                let kind = match e.kind {
                    EventKind::Touchdown => "touchdown".to_string(),
                    EventKind::RollEntry => "roll_entry".to_string(),
                    EventKind::RollExit { into } => format!("roll_exit:{}", into.phase().as_str()),
                    EventKind::LiftOff { regime } => format!("lift_off:{}", regime.as_str()),
                };
                (kind, e.tau, PyBallState { inner: e.state })
            })
            .collect()
    }

    /// Samples as (tau, x, xdot, y, ydot, omega, H, lambda_n, lambda_t) rows.
    #[allow(clippy::type_complexity)]
    fn samples(&self) -> Vec<(f64, f64, f64, f64, f64, f64, f64, f64, f64)> {
        self.inner
            .samples
            .iter()
            .map(|s| {
                let p = s.state;
                (s.tau, p.x, p.x_dot, p.y, p.y_dot, p.omega, p.slip_velocity(), s.lambda_n, s.lambda_t)
            })
            .collect()
    }

    fn to_csv(&self) -> String {
        spinbounce::io::trajectory_to_csv(&self.inner)
    }

    fn to_json(&self) -> PyResult<String> {
        spinbounce::io::trajectory_to_json(&self.inner).map_err(err)
    }
}

fn integrator(rel_tol: f64) -> IntegratorConfig {
    IntegratorConfig { rel_tol, ..IntegratorConfig::default() }
}

/// Integrate one bounce from an in-contact state to lift-off.
#[pyfunction]
#[pyo3(name = "simulate_bounce", signature = (model, state, rel_tol=1e-9))]
fn py_simulate_bounce(model: &PyModel, state: &PyBallState, rel_tol: f64) -> PyResult<PyTrajectory> {
    let traj = simulate_bounce(&model.inner, &state.inner, &integrator(rel_tol)).map_err(err)?;
    Ok(PyTrajectory { inner: traj })
}

/// Closed-form rigid bounce. Returns (case, final_state, roll_entry_impulse).
#[pyfunction]
#[pyo3(name = "rigid_bounce")]
fn py_rigid_bounce(
    xdot: f64,
    ydot: f64,
    omega: f64,
    mu: f64,
    r: f64,
) -> PyResult<(String, PyBallState, Option<f64>)> {
    let params = RigidParams::new(mu, r).map_err(err)?;
    let out = rigid_bounce(&BallState::touchdown(xdot, ydot, omega), &params).map_err(err)?;
    Ok((out.case.to_string(), PyBallState { inner: out.final_state }, out.roll_entry_impulse))
}

/// Rigid impact case label ("I+", "II-", "III", ...).
#[pyfunction]
#[pyo3(name = "classify_rigid_case")]
fn py_classify(xdot: f64, ydot: f64, omega: f64, mu: f64, r: f64) -> PyResult<String> {
    let params = RigidParams::new(mu, r).map_err(err)?;
    Ok(classify_rigid_case(&BallState::touchdown(xdot, ydot, omega), &params)
        .map_err(err)?
        .to_string())
}

/// Impulse-domain oracle trace as (v_T, v_N) pairs.
#[pyfunction]
#[pyo3(name = "impulse_trace", signature = (xdot, ydot, omega, mu, r, steps=100_000))]
fn py_impulse_trace(
    xdot: f64,
    ydot: f64,
    omega: f64,
    mu: f64,
    r: f64,
    steps: usize,
) -> PyResult<Vec<(f64, f64)>> {
    let params = RigidParams::new(mu, r).map_err(err)?;
    let trace = impulse_trace_oracle(&BallState::touchdown(xdot, ydot, omega), &params, steps)
        .map_err(err)?;
    Ok(trace.samples)
}

/// Locate and classify the two-fold singularity; returns a JSON report with
/// sigma/nu quantities, eigenvalues, classification and the printed
/// asymptotic product.
#[pyfunction]
#[pyo3(name = "two_fold_report", signature = (model, seed_xdot=-0.2, seed_ydot=1.3))]
fn py_two_fold_report(model: &PyModel, seed_xdot: f64, seed_ydot: f64) -> PyResult<String> {
    let seed = two_fold_seed(&model.inner, seed_xdot, seed_ydot);
    let s = locate_two_fold(&model.inner, &seed).map_err(err)?;
    let report = two_fold_report(&model.inner, &s).map_err(err)?;
    let asym = nu_product_asymptotic(&model.inner, &s).ok();
    let mut value = serde_json::to_value(report).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    value["nu_product_asymptotic"] = serde_json::json!(asym);
    Ok(value.to_string())
}

/// Bisect the spin-reversal manifold over touchdown spin at fixed incoming
/// velocities; returns a JSON result.
#[pyfunction]
#[pyo3(name = "spin_reversal_manifold", signature = (model, xdot0, ydot0, lo, hi, tol=1e-6))]
fn py_manifold(
    model: &PyModel,
    xdot0: f64,
    ydot0: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> PyResult<String> {
    let result = find_spin_reversal_manifold(
        &model.inner,
        omega_family(xdot0, ydot0),
        (lo, hi),
        tol,
        &IntegratorConfig::default(),
    )
    .map_err(err)?;
    serde_json::to_string(&result).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Run the rolling-lift-off perturbation experiment; returns trajectories
/// (A, B, C) for the base state and spin perturbations of +/- delta.
#[pyfunction]
#[pyo3(name = "perturbation_experiment", signature = (model, state, delta=0.01))]
fn py_perturb(
    model: &PyModel,
    state: &PyBallState,
    delta: f64,
) -> PyResult<(PyTrajectory, PyTrajectory, PyTrajectory)> {
    let [a, b, c] =
        perturbation_experiment(&model.inner, &state.inner, delta, &IntegratorConfig::default())
            .map_err(err)?;
    Ok((PyTrajectory { inner: a }, PyTrajectory { inner: b }, PyTrajectory { inner: c }))
}

/// Sweep a touchdown grid; returns (h0, hf, rolled) per grid point.
#[pyfunction]
#[pyo3(name = "sweep", signature = (model, xdot, ydot, omega))]
fn py_sweep(
    model: &PyModel,
    xdot: (f64, f64, usize),
    ydot: (f64, f64, usize),
    omega: (f64, f64, usize),
) -> Vec<(f64, f64, bool)> {
    let grid = SweepGrid {
        x_dot: Grid1 { min: xdot.0, max: xdot.1, count: xdot.2 },
        y_dot: Grid1 { min: ydot.0, max: ydot.1, count: ydot.2 },
        omega: Grid1 { min: omega.0, max: omega.1, count: omega.2 },
    };
    sweep_ics(&model.inner, &grid, &IntegratorConfig::default())
        .into_iter()
        .map(|r| (r.h0, r.hf, r.rolled))
        .collect()
}

/// Nondimensionalize a measured record (m/s, m/s, rpm).
#[pyfunction]
#[pyo3(name = "nondimensionalize", signature = (vx, vy, rpm, ball_radius_m=0.0215, time_unit_s=1.0))]
fn py_nondim(
    vx: f64,
    vy: f64,
    rpm: f64,
    ball_radius_m: f64,
    time_unit_s: f64,
) -> PyResult<(f64, f64, f64)> {
    UnitSystem { ball_radius_m, time_unit_s }.nondimensionalize_record(vx, vy, rpm).map_err(err)
}

#[pymodule]
fn spinbounce_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBallState>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(py_simulate_bounce, m)?)?;
    m.add_function(wrap_pyfunction!(py_rigid_bounce, m)?)?;
    m.add_function(wrap_pyfunction!(py_classify, m)?)?;
    m.add_function(wrap_pyfunction!(py_impulse_trace, m)?)?;
    m.add_function(wrap_pyfunction!(py_two_fold_report, m)?)?;
    m.add_function(wrap_pyfunction!(py_manifold, m)?)?;
    m.add_function(wrap_pyfunction!(py_perturb, m)?)?;
    m.add_function(wrap_pyfunction!(py_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(py_nondim, m)?)?;
    Ok(())
}
