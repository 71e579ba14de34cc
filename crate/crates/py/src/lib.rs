//! Python bindings: scalar numerics, the benchmark immersion, Lyapunov
//! design/verification, and preset simulation runs. Thin wrappers over
//! the `triobs` crate; library errors surface as `ValueError`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use triobs::config::{build_scenario, preset, ConfigDoc};
use triobs::lyapunov::{self, DecreaseCertificate};
use triobs::numerics::{self, SignRule, WeightVector};
use triobs::plant;
use triobs::sim::{self, NoiseConfig, ScenarioResult};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_rule(rule: &str) -> PyResult<SignRule> {
    match rule {
        "zero-at-zero" => Ok(SignRule::ZeroAtZero),
        "upper-select" => Ok(SignRule::UpperSelect),
        "lower-select" => Ok(SignRule::LowerSelect),
        other => Err(PyValueError::new_err(format!(
            "unknown sign rule {other:?}; expected zero-at-zero, upper-select, or lower-select"
        ))),
    }
}

/// `sign(a) |a|^b` for `b >= 0`.
#[pyfunction]
fn signed_power(a: f64, b: f64) -> PyResult<f64> {
    if !(b >= 0.0) {
        return Err(PyValueError::new_err(format!("exponent must be >= 0, got {b}")));
    }
    Ok(numerics::signed_power(a, b))
}

/// One selection of the set-valued sign map at `a`.
#[pyfunction]
#[pyo3(signature = (a, rule = "zero-at-zero"))]
fn sign_select(a: f64, rule: &str) -> PyResult<f64> {
    Ok(numerics::sign_select(a, parse_rule(rule)?))
}

/// Clamp `x` to `[-bound, bound]`.
#[pyfunction]
fn saturate(x: f64, bound: f64) -> PyResult<f64> {
    if !(bound >= 0.0) {
        return Err(PyValueError::new_err(format!("bound must be >= 0, got {bound}")));
    }
    Ok(numerics::saturate(x, bound))
}

/// Homogeneity weights `r_1..r_{m+1}` for degree `d0` (the last entry is
/// the virtual weight driving the final correction exponent).
#[pyfunction]
fn weights(m: usize, d0: f64) -> PyResult<Vec<f64>> {
    Ok(WeightVector::new(m, d0).map_err(value_err)?.r)
}

/// Component-wise dilation `e_i * lam^{w_i}`.
#[pyfunction]
fn dilation(e: Vec<f64>, lam: f64, w: Vec<f64>) -> PyResult<Vec<f64>> {
    if !(lam > 0.0) {
        return Err(PyValueError::new_err(format!("scale must be positive, got {lam}")));
    }
    if w.len() < e.len() {
        return Err(PyValueError::new_err("need one weight per component"));
    }
    Ok(numerics::dilation(&e, lam, &w))
}

/// Flat coordinates of the benchmark oscillator state.
#[pyfunction]
fn h4(x: [f64; 3]) -> [f64; 4] {
    plant::h4(x)
}

/// Inverse of `h4` away from `z1 = z2 = 0`.
#[pyfunction]
fn h4_inverse(z: [f64; 4]) -> PyResult<[f64; 3]> {
    plant::h4_inverse(z).map_err(value_err)
}

/// Third-line nonlinearity of the immersed benchmark.
#[pyfunction]
fn phi3(u: f64, z1: f64, z3: f64) -> f64 {
    plant::phi3(u, z1, z3)
}

/// Right-hand side of the benchmark oscillator.
#[pyfunction]
fn example_dynamics(x: [f64; 3], u: f64) -> [f64; 3] {
    plant::example_dynamics(x, u)
}

/// Binomial correction coefficients placing all linear-error poles at -1.
#[pyfunction]
fn default_highgain_k(m: usize) -> Vec<f64> {
    triobs::observers::default_highgain_k(m)
}

/// Closed-form decay of the scalar comparison system from `v0`.
#[pyfunction]
fn comparison_decay(v0: f64, t: f64, lam: f64, d_v: f64, d0: f64) -> f64 {
    lyapunov::comparison_decay(v0, t, lam, d_v, d0)
}

/// Filtered Gaussian measurement noise, one sample per step instant.
#[pyfunction]
#[pyo3(signature = (n_steps, dt, sigma = 0.03, filter_a = 50.0, seed = 1))]
fn gen_noise(n_steps: usize, dt: f64, sigma: f64, filter_a: f64, seed: u64) -> Vec<f64> {
    sim::gen_noise(n_steps, dt, &NoiseConfig { sigma, filter_a, seed })
}

/// Homogeneous Lyapunov function family: weights, degree, level gains,
/// and the correction gains they induce.
#[pyclass(name = "LyapunovParams", skip_from_py_object)]
#[derive(Clone)]
struct PyLyapunovParams {
    inner: lyapunov::LyapunovParams,
}

#[pymethods]
impl PyLyapunovParams {
    #[new]
    fn new(m: usize, d0: f64, d_v: f64, ell: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: lyapunov::LyapunovParams::new(m, d0, d_v, ell).map_err(value_err)? })
    }

    /// Build with explicit correction gains `k` (shape-checked only).
    #[staticmethod]
    fn from_parts(m: usize, d0: f64, d_v: f64, ell: Vec<f64>, k: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: lyapunov::LyapunovParams::from_parts(m, d0, d_v, ell, k).map_err(value_err)?,
        })
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn d0(&self) -> f64 {
        self.inner.d0()
    }

    #[getter]
    fn d_v(&self) -> f64 {
        self.inner.d_v
    }

    #[getter]
    fn ell(&self) -> Vec<f64> {
        self.inner.ell.clone()
    }

    #[getter]
    fn k(&self) -> Vec<f64> {
        self.inner.k.clone()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.r.clone()
    }

    /// Lyapunov value at the error vector `e`.
    fn eval_v(&self, e: Vec<f64>) -> PyResult<f64> {
        self.check_dim(&e)?;
        Ok(lyapunov::eval_v(&e, &self.inner))
    }

    /// Gradient of the Lyapunov value at `e`.
    fn grad_v(&self, e: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check_dim(&e)?;
        Ok(lyapunov::grad_v(&e, &self.inner))
    }

    fn __repr__(&self) -> String {
        format!(
            "LyapunovParams(m={}, d0={}, d_v={}, ell={:?}, k={:?})",
            self.inner.m(),
            self.inner.d0(),
            self.inner.d_v,
            self.inner.ell,
            self.inner.k,
        )
    }
}

impl PyLyapunovParams {
    fn check_dim(&self, e: &[f64]) -> PyResult<()> {
        if e.len() != self.inner.m() {
            return Err(PyValueError::new_err(format!(
                "expected an error vector of length {}, got {}",
                self.inner.m(),
                e.len()
            )));
        }
        Ok(())
    }
}

fn cert_dict<'py>(py: Python<'py>, c: &DecreaseCertificate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("lambda", c.lambda)?;
    d.set_item("kappa", c.kappa)?;
    d.set_item("samples", c.samples)?;
    d.set_item("seed", c.seed)?;
    d.set_item("worst", c.worst.clone())?;
    Ok(d)
}

/// Module-level convenience mirroring `LyapunovParams.eval_v`.
#[pyfunction]
fn eval_v(params: &PyLyapunovParams, e: Vec<f64>) -> PyResult<f64> {
    params.eval_v(e)
}

/// Module-level convenience mirroring `LyapunovParams.grad_v`.
#[pyfunction]
fn grad_v(params: &PyLyapunovParams, e: Vec<f64>) -> PyResult<Vec<f64>> {
    params.grad_v(e)
}

/// Search level gains certifying strict sphere decrease; returns the
/// parameters and the certificate as a dict.
#[pyfunction]
#[pyo3(signature = (m, d0, d_v = None, samples = 20_000, margin = 1e-6, max_ell = 1e36, seed = 42))]
fn design_gains<'py>(
    py: Python<'py>,
    m: usize,
    d0: f64,
    d_v: Option<f64>,
    samples: usize,
    margin: f64,
    max_ell: f64,
    seed: u64,
) -> PyResult<(PyLyapunovParams, Bound<'py, PyDict>)> {
    let d_v = d_v.unwrap_or(2.0 * m as f64);
    let (params, cert) =
        lyapunov::design_gains(m, d0, d_v, samples, margin, max_ell, seed).map_err(value_err)?;
    Ok((PyLyapunovParams { inner: params }, cert_dict(py, &cert)?))
}

/// Sample the gauge sphere for the worst Lyapunov derivative; raises if
/// the decrease fails, otherwise returns the certificate as a dict.
#[pyfunction]
#[pyo3(signature = (params, samples = 20_000, seed = 7))]
fn verify_decrease<'py>(
    py: Python<'py>,
    params: &PyLyapunovParams,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let cert = lyapunov::verify_decrease(&params.inner, samples, seed).map_err(value_err)?;
    cert_dict(py, &cert)
}

fn result_dict<'py>(py: Python<'py>, res: &ScenarioResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("times", res.times.clone())?;
    d.set_item("plant_z", res.plant_z.clone())?;
    d.set_item("dt", res.dt)?;
    d.set_item("seed", res.seed)?;
    let obs = PyList::empty(py);
    for o in &res.observers {
        let od = PyDict::new(py);
        od.set_item("label", o.label.clone())?;
        od.set_item("gain", o.gain)?;
        od.set_item("state_labels", o.state_labels.clone())?;
        od.set_item("states", o.states.clone())?;
        od.set_item("errors", o.errors.clone())?;
        od.set_item("final_errors", o.final_errors.clone())?;
        od.set_item("peaking", o.peaking)?;
        od.set_item("convergence_time", o.convergence_time)?;
        od.set_item("diverged_at", o.diverged_at)?;
        obs.append(od)?;
    }
    d.set_item("observers", obs)?;
    Ok(d)
}

fn apply_gain(doc: &mut ConfigDoc, gain: f64) -> PyResult<()> {
    let Some(obs) = doc.observer.as_mut() else {
        return Err(PyValueError::new_err("the scenario has no observer to retune"));
    };
    match &mut obs.blocks {
        Some(blocks) => {
            for b in blocks {
                b.gain = gain;
            }
        }
        None => obs.gain = Some(gain),
    }
    Ok(())
}

/// Run a built-in experiment (`example-plant`, `table3`, `table4`,
/// `cascade-hg`, `cascade-hom`) and return times, plant trajectory, and
/// per-observer records as plain lists/dicts.
#[pyfunction]
#[pyo3(signature = (name, gain = None, dt = None, t_final = None, no_noise = false, seed = None))]
fn run_preset<'py>(
    py: Python<'py>,
    name: &str,
    gain: Option<f64>,
    dt: Option<f64>,
    t_final: Option<f64>,
    no_noise: bool,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut doc = preset(name).map_err(value_err)?;
    if let Some(dt) = dt {
        doc.scenario.dt = dt;
    }
    if let Some(t) = t_final {
        doc.scenario.t_final = t;
    }
    if no_noise {
        doc.noise = None;
    }
    if let Some(s) = seed {
        doc.scenario.seed = s;
        if let Some(n) = doc.noise.as_mut() {
            n.seed = s;
        }
    }
    if let Some(g) = gain {
        apply_gain(&mut doc, g)?;
    }
    let sc = build_scenario(&doc).map_err(value_err)?;
    let res = sim::run(&sc).map_err(value_err)?;
    result_dict(py, &res)
}

#[pymodule]
fn triobs_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(signed_power, m)?)?;
    m.add_function(wrap_pyfunction!(sign_select, m)?)?;
    m.add_function(wrap_pyfunction!(saturate, m)?)?;
    m.add_function(wrap_pyfunction!(weights, m)?)?;
    m.add_function(wrap_pyfunction!(dilation, m)?)?;
    m.add_function(wrap_pyfunction!(h4, m)?)?;
    m.add_function(wrap_pyfunction!(h4_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(phi3, m)?)?;
    m.add_function(wrap_pyfunction!(example_dynamics, m)?)?;
    m.add_function(wrap_pyfunction!(default_highgain_k, m)?)?;
    m.add_function(wrap_pyfunction!(comparison_decay, m)?)?;
    m.add_function(wrap_pyfunction!(gen_noise, m)?)?;
    m.add_function(wrap_pyfunction!(eval_v, m)?)?;
    m.add_function(wrap_pyfunction!(grad_v, m)?)?;
    m.add_function(wrap_pyfunction!(design_gains, m)?)?;
    m.add_function(wrap_pyfunction!(verify_decrease, m)?)?;
    m.add_function(wrap_pyfunction!(run_preset, m)?)?;
    m.add_class::<PyLyapunovParams>()?;
    Ok(())
}
