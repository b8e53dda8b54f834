//! Python bindings: channels, encoder designs, codebooks, and Monte Carlo
//! runs. Matrices cross the boundary as lists of rows.

use std::path::PathBuf;

use feedcap::coding::analog_mse as core_analog_mse;
use feedcap::finite_horizon::{mmse_fisher_crb, mutual_info_matrix_form};
use feedcap::verify::{run_suite, VerifyOptions};
use feedcap::{
    capacity, ChannelModel, ChannelSpec, EncoderDesign, Error, GainSchedule, GeneralCodingConfig, SimConfig,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Dimension(_)
        | Error::NotSiso
        | Error::NotStrictlyCausal(_)
        | Error::UnstableChannel(_)
        | Error::NonMinimumPhase(_)
        | Error::Uncontrollable { .. }
        | Error::Unobservable { .. }
        | Error::DegenerateChannel
        | Error::InvalidChannel(_)
        | Error::EigenvalueCollision(_)
        | Error::HorizonTooShort { .. }
        | Error::CodebookOverflow(_)
        | Error::IndexOutOfRange { .. }
        | Error::InvalidArgument(_)
        | Error::Budget { .. }
        | Error::Format(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for feedcap::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(name: &str, data: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let ncols = data.first().map_or(0, Vec::len);
    if data.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err(format!("{name}: rows have unequal lengths")));
    }
    Ok(DMatrix::from_fn(data.len(), ncols, |i, j| data[i][j]))
}

fn schedule(name: &str) -> PyResult<GainSchedule> {
    match name {
        "steady" => Ok(GainSchedule::Steady),
        "time-varying" | "time_varying" => Ok(GainSchedule::TimeVarying),
        _ => Err(PyValueError::new_err(format!(
            "unknown gain schedule {name:?}; expected \"steady\" or \"time-varying\""
        ))),
    }
}

/// A validated stable minimum-phase channel, stored through its inverse filter.
#[pyclass(name = "Channel", module = "feedcap", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyChannel {
    inner: ChannelModel,
}

#[pymethods]
impl PyChannel {
    /// The bundled third-order channel.
    #[staticmethod]
    fn isi3() -> Self {
        Self {
            inner: ChannelModel::isi3(),
        }
    }

    #[staticmethod]
    fn awgn() -> Self {
        Self {
            inner: ChannelModel::awgn(),
        }
    }

    /// Inverse-filter coefficients in ascending powers of `z^-1`.
    #[staticmethod]
    fn rational(num: Vec<f64>, den: Vec<f64>) -> PyResult<Self> {
        let inner = feedcap::validate(&ChannelSpec::Rational { num, den }).py()?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = feedcap::validate(&ChannelSpec::from_json(text).py()?).py()?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: ChannelModel::from_file(path).py()?,
        })
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter(F)]
    fn f(&self) -> Vec<Vec<f64>> {
        rows(self.inner.f())
    }

    #[getter(G)]
    fn g(&self) -> Vec<f64> {
        self.inner.g().iter().copied().collect()
    }

    #[getter(H)]
    fn h(&self) -> Vec<f64> {
        self.inner.h().iter().copied().collect()
    }

    /// `|Z(e^{i theta})|^2`.
    fn power_gain(&self, theta: f64) -> PyResult<f64> {
        self.inner.power_gain(theta).py()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_spec()).map_err(|e| to_py(e.into()))
    }

    fn __repr__(&self) -> String {
        format!("Channel(order={})", self.inner.order())
    }
}

/// Optimal feedback encoder for one rate.
#[pyclass(name = "Design", module = "feedcap", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDesign {
    inner: EncoderDesign,
}

#[pymethods]
impl PyDesign {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: EncoderDesign::from_json(text).py()?,
        })
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: EncoderDesign::read(path).py()?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().py()
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write(path).py()
    }

    #[getter]
    fn channel(&self) -> PyChannel {
        PyChannel {
            inner: self.inner.channel.clone(),
        }
    }

    #[getter]
    fn n_star(&self) -> usize {
        self.inner.n_star
    }

    /// Bits per channel use.
    #[getter]
    fn rate(&self) -> f64 {
        self.inner.rate
    }

    #[getter]
    fn power(&self) -> f64 {
        self.inner.power
    }

    #[getter]
    fn power_db(&self) -> f64 {
        self.inner.power_db()
    }

    #[getter]
    fn ke(&self) -> f64 {
        self.inner.ke
    }

    #[getter]
    fn sign(&self) -> f64 {
        self.inner.sign
    }

    #[getter]
    fn a_f(&self) -> Vec<f64> {
        self.inner.a_f.clone()
    }

    #[getter]
    fn a_star(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.a_star)
    }

    #[getter]
    fn c_star(&self) -> Vec<f64> {
        self.inner.c_star.iter().copied().collect()
    }

    #[getter]
    fn l1(&self) -> Vec<f64> {
        self.inner.l1.iter().copied().collect()
    }

    #[getter]
    fn l2(&self) -> Vec<f64> {
        self.inner.l2.iter().copied().collect()
    }

    #[getter]
    fn sigma_star(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.sigma_star)
    }

    /// Eigenvalues of `A*` as complex numbers.
    fn eigenvalues(&self) -> Vec<Complex64> {
        self.inner.a_star.complex_eigenvalues().iter().copied().collect()
    }

    /// Rate recomputed from the unstable eigenvalues of `A*`.
    fn achieved_rate(&self) -> PyResult<f64> {
        self.inner.achieved_rate().py()
    }

    fn codebook(&self, horizon: usize, epsilon: f64) -> PyResult<PyCodebook> {
        Ok(PyCodebook {
            inner: feedcap::build_codebook(&self.inner, horizon, epsilon).py()?,
        })
    }

    /// Runs the loop on message `w` with the given noise samples, one per use.
    #[pyo3(signature = (w, noise, schedule = "steady"))]
    fn transmit(&self, w: Vec<f64>, noise: Vec<f64>, schedule: &str) -> PyResult<PyTrace> {
        if noise.is_empty() {
            return Err(PyValueError::new_err("noise must have at least one sample"));
        }
        let scheme = feedcap::Scheme::new(&self.inner, noise.len() - 1, self::schedule(schedule)?).py()?;
        let trace = scheme.run(&DVector::from_vec(w), &noise).py()?;
        Ok(PyTrace { inner: trace })
    }

    fn __repr__(&self) -> String {
        format!(
            "Design(n_star={}, rate={:.6}, power={:.6}, ke={:.6})",
            self.inner.n_star, self.inner.rate, self.inner.power, self.inner.ke
        )
    }
}

/// Hypercube partition in the error eigenbasis.
#[pyclass(name = "Codebook", module = "feedcap", frozen)]
struct PyCodebook {
    inner: feedcap::Codebook,
}

#[pymethods]
impl PyCodebook {
    /// Number of messages.
    #[getter]
    fn size(&self) -> u128 {
        self.inner.size
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    #[getter]
    fn sigmas(&self) -> Vec<f64> {
        self.inner.sigmas.clone()
    }

    #[getter]
    fn segments_per_side(&self) -> Vec<u64> {
        self.inner.segments_per_side.clone()
    }

    /// Bits per channel use actually carried.
    #[getter]
    fn rate_actual(&self) -> f64 {
        self.inner.rate_actual()
    }

    fn encode(&self, index: u128) -> PyResult<Vec<f64>> {
        Ok(self.inner.encode_message(index).py()?.iter().copied().collect())
    }

    fn decode(&self, estimate: Vec<f64>) -> PyResult<u128> {
        self.inner.decode_message(&DVector::from_vec(estimate)).py()
    }

    fn __len__(&self) -> PyResult<usize> {
        usize::try_from(self.inner.size).map_err(|_| PyValueError::new_err("codebook size exceeds usize"))
    }
}

/// Signals of one run of the loop.
#[pyclass(name = "Trace", module = "feedcap", frozen)]
struct PyTrace {
    inner: feedcap::TransmissionTrace,
}

#[pymethods]
impl PyTrace {
    #[getter]
    fn u(&self) -> Vec<f64> {
        self.inner.u.clone()
    }

    #[getter]
    fn y(&self) -> Vec<f64> {
        self.inner.y.clone()
    }

    /// Decoder estimates of the message after each use.
    #[getter]
    fn estimates(&self) -> Vec<Vec<f64>> {
        self.inner.x_hat_0.iter().map(|v| v.iter().copied().collect()).collect()
    }

    #[getter]
    fn power_running_avg(&self) -> Vec<f64> {
        self.inner.power_running_avg.clone()
    }

    #[getter]
    fn max_abs_internal(&self) -> f64 {
        self.inner.max_abs_internal
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Monte Carlo results; `export` writes the csv/json files.
#[pyclass(name = "SimResult", module = "feedcap", frozen)]
struct PySimResult {
    inner: feedcap::SimResult,
}

#[pymethods]
impl PySimResult {
    /// `(T, pe_emp, pe_emp_sigma, pe_theory)` per horizon.
    #[getter]
    fn pe(&self) -> Vec<(usize, f64, f64, f64)> {
        self.inner
            .pe
            .iter()
            .map(|r| (r.horizon, r.pe_emp, r.pe_emp_sigma, r.pe_theory))
            .collect()
    }

    #[getter]
    fn avg_power_trace(&self) -> Vec<f64> {
        self.inner.avg_power_trace.clone()
    }

    #[getter]
    fn sq_error_trace(&self) -> Vec<f64> {
        self.inner.sq_error_trace.clone()
    }

    /// `(t, det_emp, det_theory)` per checkpoint.
    #[getter]
    fn mse_det(&self) -> Vec<(usize, f64, f64)> {
        self.inner.mse.iter().map(|r| (r.t, r.det_emp, r.det_theory)).collect()
    }

    #[getter]
    fn design_power(&self) -> f64 {
        self.inner.design_power
    }

    fn export(&self, dir: PathBuf) -> PyResult<()> {
        self.inner.export(&dir).py()
    }
}

#[pyfunction]
fn power_for_rate(py: Python<'_>, channel: &PyChannel, rate: f64) -> PyResult<PyDesign> {
    let inner = py.detach(|| feedcap::power_for_rate(&channel.inner, rate)).py()?;
    Ok(PyDesign { inner })
}

/// Feedback capacity at `power`, with the design that attains it.
#[pyfunction]
fn capacity_for_power(py: Python<'_>, channel: &PyChannel, power: f64) -> PyResult<(f64, PyDesign)> {
    let (rate, inner) = py.detach(|| feedcap::capacity_for_power(&channel.inner, power)).py()?;
    Ok((rate, PyDesign { inner }))
}

/// Power of the best scalar encoder at `rate`, which bounds the optimal power
/// from above.
#[pyfunction]
fn upper_bound(channel: &PyChannel, rate: f64) -> PyResult<f64> {
    feedcap::upper_bound(&channel.inner, rate).py()
}

#[pyfunction]
fn feedforward_capacity(py: Python<'_>, channel: &PyChannel, power: f64) -> PyResult<f64> {
    py.detach(|| capacity::feedforward_capacity(&channel.inner, power)).py()
}

#[pyfunction]
fn theoretical_pe(design: &PyDesign, horizon: usize, epsilon: f64) -> PyResult<f64> {
    feedcap::theoretical_pe(&design.inner, horizon, epsilon).py()
}

/// Error covariance of the message estimate after use `t`.
#[pyfunction]
fn analog_mse(design: &PyDesign, t: usize) -> PyResult<Vec<Vec<f64>>> {
    Ok(rows(&core_analog_mse(&design.inner, t).py()?))
}

/// `I(W; ybar^T)` in bits and the message MMSE for a general linear
/// encoder `u_t = C A^t W` plus the channel, over `T + 1` uses.
#[pyfunction]
fn finite_horizon(
    a: Vec<Vec<f64>>,
    c: Vec<f64>,
    horizon: usize,
    channel: &PyChannel,
) -> PyResult<(f64, f64, Vec<Vec<f64>>)> {
    let n = c.len();
    let cfg = GeneralCodingConfig::new(
        matrix("a", a)?,
        DMatrix::from_row_slice(1, n, &c),
        horizon,
        channel.inner.clone(),
    )
    .py()?;
    let bits = mutual_info_matrix_form(&cfg).py()?;
    let report = mmse_fisher_crb(&cfg).py()?;
    Ok((bits, report.input_power, rows(&report.mmse_w)))
}

#[pyfunction]
#[pyo3(signature = (design, trials, horizon, epsilon, seed = 0, schedule = "steady"))]
fn run_digital(
    py: Python<'_>,
    design: &PyDesign,
    trials: usize,
    horizon: usize,
    epsilon: f64,
    seed: u64,
    schedule: &str,
) -> PyResult<PySimResult> {
    let mut cfg = SimConfig::digital(trials, horizon, epsilon, seed);
    cfg.schedule = self::schedule(schedule)?;
    let inner = py.detach(|| feedcap::run_digital(&design.inner, &cfg)).py()?;
    Ok(PySimResult { inner })
}

#[pyfunction]
#[pyo3(signature = (design, trials, horizon, seed = 0, checkpoints = Vec::new(), schedule = "steady"))]
fn run_analog(
    py: Python<'_>,
    design: &PyDesign,
    trials: usize,
    horizon: usize,
    seed: u64,
    checkpoints: Vec<usize>,
    schedule: &str,
) -> PyResult<PySimResult> {
    let mut cfg = SimConfig::analog(trials, horizon, seed);
    cfg.schedule = self::schedule(schedule)?;
    cfg.mse_checkpoints = checkpoints;
    let inner = py.detach(|| feedcap::run_analog(&design.inner, &cfg)).py()?;
    Ok(PySimResult { inner })
}

/// Self-check suite; returns `(name, residual, tolerance, passed)` rows.
#[pyfunction]
#[pyo3(signature = (channel, full = false))]
fn verify(py: Python<'_>, channel: &PyChannel, full: bool) -> Vec<(String, f64, f64, bool)> {
    let opts = if full { VerifyOptions::full() } else { VerifyOptions::quick() };
    py.detach(|| run_suite(&channel.inner, &opts))
        .into_iter()
        .map(|c| (c.name, c.residual, c.tolerance, c.passed))
        .collect()
}

#[pymodule]
#[pyo3(name = "feedcap")]
fn feedcap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChannel>()?;
    m.add_class::<PyDesign>()?;
    m.add_class::<PyCodebook>()?;
    m.add_class::<PyTrace>()?;
    m.add_class::<PySimResult>()?;
    m.add_function(wrap_pyfunction!(power_for_rate, m)?)?;
    m.add_function(wrap_pyfunction!(capacity_for_power, m)?)?;
    m.add_function(wrap_pyfunction!(upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(feedforward_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(theoretical_pe, m)?)?;
    m.add_function(wrap_pyfunction!(analog_mse, m)?)?;
    m.add_function(wrap_pyfunction!(finite_horizon, m)?)?;
    m.add_function(wrap_pyfunction!(run_digital, m)?)?;
    m.add_function(wrap_pyfunction!(run_analog, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
