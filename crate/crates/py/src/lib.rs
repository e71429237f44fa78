//! Python bindings for the connectivity and link-time models, the Monte
//! Carlo estimators and the routing simulator.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use stripnet_core::config::{self, Config};
use stripnet_core::connectivity::{self, SegmentDistribution, StreamSpec};
use stripnet_core::harness::{self, SimArgs};
use stripnet_core::linktime::{self, Direction, OppositeSpeed};
use stripnet_core::mc::{self, McConfig};
use stripnet_core::protocols::{self, ProtocolConfig, PROTOCOL_NAMES};
use stripnet_core::sim::RunOptions;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn direction(name: &str) -> PyResult<Direction> {
    match name {
        "same" => Ok(Direction::Same),
        "opposite" => Ok(Direction::Opposite),
        other => Err(value_error(format!("direction must be `same` or `opposite`, got `{other}`"))),
    }
}

fn opposite_speed(name: &str) -> PyResult<OppositeSpeed> {
    match name {
        "closing" => Ok(OppositeSpeed::Closing),
        "literal" => Ok(OppositeSpeed::Literal),
        other => Err(value_error(format!("opposite_speed must be `closing` or `literal`, got `{other}`"))),
    }
}

fn parse_config(text: &str) -> PyResult<Config> {
    text.parse::<Config>().map_err(value_error)
}

#[pyclass(name = "ConnectivityReport", frozen, get_all)]
struct PyConnectivityReport {
    per_segment_direct: Vec<f64>,
    pairwise_indirect: Vec<f64>,
    efficiency: Vec<f64>,
    chain: f64,
}

#[pymethods]
impl PyConnectivityReport {
    fn __repr__(&self) -> String {
        format!(
            "ConnectivityReport(per_segment_direct={:?}, pairwise_indirect={:?}, efficiency={:?}, chain={})",
            self.per_segment_direct, self.pairwise_indirect, self.efficiency, self.chain
        )
    }
}

#[pyclass(name = "StripModel", frozen)]
struct PyStripModel {
    inner: connectivity::StripModel,
}

#[pymethods]
impl PyStripModel {
    #[new]
    fn new(d: f64, n_segments: u32, mu: f64, sigma2: f64, beta: f64) -> PyResult<Self> {
        let inner = connectivity::StripModel::new(d, n_segments, mu, sigma2, beta).map_err(value_error)?;
        Ok(PyStripModel { inner })
    }

    /// Decay rate of the position density (1/m).
    #[getter]
    fn m(&self) -> f64 {
        self.inner.m()
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length()
    }

    #[pyo3(signature = (quadrature_steps = 200))]
    fn report(&self, quadrature_steps: usize) -> PyResult<PyConnectivityReport> {
        let r = connectivity::ConnectivityReport::for_strip(&self.inner, quadrature_steps).map_err(value_error)?;
        Ok(PyConnectivityReport {
            per_segment_direct: r.per_segment_direct,
            pairwise_indirect: r.pairwise_indirect,
            efficiency: r.efficiency,
            chain: r.chain,
        })
    }
}

#[pyclass(name = "LinkTimeReport", frozen, get_all)]
struct PyLinkTimeReport {
    direction: String,
    speed_levels: u32,
    t_comm_same: f64,
    t_comm_diff: f64,
    ct: f64,
    p_break: f64,
    p_link: f64,
    p_link_raw: f64,
    degenerate: bool,
}

#[pymethods]
impl PyLinkTimeReport {
    fn __repr__(&self) -> String {
        format!(
            "LinkTimeReport(direction='{}', speed_levels={}, ct={}, p_link={}, p_link_raw={})",
            self.direction, self.speed_levels, self.ct, self.p_link, self.p_link_raw
        )
    }
}

#[pyclass(name = "KinematicsConfig", frozen)]
struct PyKinematicsConfig {
    inner: linktime::KinematicsConfig,
}

#[pymethods]
impl PyKinematicsConfig {
    #[new]
    fn new(v_min: f64, v_max: f64, delta_v: f64, t_r: f64, spacing: f64, horizon: f64) -> PyResult<Self> {
        let inner = linktime::KinematicsConfig::new(v_min, v_max, delta_v, t_r, spacing, horizon).map_err(value_error)?;
        Ok(PyKinematicsConfig { inner })
    }

    #[getter]
    fn speed_levels(&self) -> PyResult<u32> {
        self.inner.speed_levels().map_err(value_error)
    }

    #[pyo3(signature = (direction = "same", opposite_speed = "closing"))]
    fn report(&self, direction: &str, opposite_speed: &str) -> PyResult<PyLinkTimeReport> {
        let r = linktime::LinkTimeReport::compute_with(&self.inner, self::direction(direction)?, self::opposite_speed(opposite_speed)?)
            .map_err(value_error)?;
        Ok(PyLinkTimeReport {
            direction: r.direction.to_string(),
            speed_levels: r.speed_levels,
            t_comm_same: r.t_comm_same,
            t_comm_diff: r.t_comm_diff,
            ct: r.ct,
            p_break: r.p_break,
            p_link: r.p_link,
            p_link_raw: r.p_link_raw,
            degenerate: r.is_degenerate(),
        })
    }
}

#[pyclass(name = "McEstimate", frozen, get_all)]
struct PyMcEstimate {
    mean: f64,
    std_error: f64,
    samples: u64,
}

#[pymethods]
impl PyMcEstimate {
    fn z_score(&self, reference: f64) -> f64 {
        mc::McEstimate {
            mean: self.mean,
            std_error: self.std_error,
            samples: self.samples,
        }
        .z_score(reference)
    }

    fn __repr__(&self) -> String {
        format!("McEstimate(mean={}, std_error={}, samples={})", self.mean, self.std_error, self.samples)
    }
}

impl From<mc::McEstimate> for PyMcEstimate {
    fn from(e: mc::McEstimate) -> Self {
        PyMcEstimate {
            mean: e.mean,
            std_error: e.std_error,
            samples: e.samples,
        }
    }
}

#[pyclass(name = "SimMetrics", frozen, get_all)]
struct PySimMetrics {
    protocol: String,
    seed: u64,
    duration: f64,
    data_sent: u64,
    data_delivered: u64,
    bytes_delivered: u64,
    control_transmissions: u64,
    throughput: f64,
    e2ed: f64,
    nrl: Option<f64>,
    data_in_flight: u64,
}

#[pymethods]
impl PySimMetrics {
    fn __repr__(&self) -> String {
        format!(
            "SimMetrics(protocol='{}', throughput={}, e2ed={}, nrl={:?}, control_transmissions={})",
            self.protocol, self.throughput, self.e2ed, self.nrl, self.control_transmissions
        )
    }
}

#[pyfunction]
fn derive_m(mu: f64, sigma2: f64, beta: f64) -> PyResult<f64> {
    connectivity::derive_m(mu, sigma2, beta).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (m, d, i, quadrature_steps = 200))]
fn direct_comm_probability(m: f64, d: f64, i: u32, quadrature_steps: usize) -> PyResult<f64> {
    connectivity::direct_comm_probability(m, d, i, quadrature_steps).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (rate, mu, horizon, strip_length, strip_offset = 0.0, variance_scale = 0.0, quadrature_steps = 1000))]
fn stream_intensity(
    rate: f64,
    mu: f64,
    horizon: f64,
    strip_length: f64,
    strip_offset: f64,
    variance_scale: f64,
    quadrature_steps: usize,
) -> PyResult<f64> {
    let spec = StreamSpec {
        rate,
        strip_offset,
        strip_length,
        variance_scale,
    };
    connectivity::stream_intensity(&spec, mu, horizon, quadrature_steps).map_err(value_error)
}

/// Poisson probability of `n` nodes in a segment with parameter `phi`.
#[pyfunction]
fn segment_pmf(phi: f64, n: u64) -> PyResult<f64> {
    Ok(SegmentDistribution::new(phi).map_err(value_error)?.pmf(n))
}

#[pyfunction]
fn segment_pgf(phi: f64, z: f64) -> PyResult<f64> {
    SegmentDistribution::new(phi).map_err(value_error)?.pgf(z).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (m, d, i, samples = 100_000, seed = 1, batches = 100))]
fn estimate_direct_prob(m: f64, d: f64, i: u32, samples: u64, seed: u64, batches: u32) -> PyResult<PyMcEstimate> {
    let cfg = McConfig::new(samples, seed, batches).map_err(value_error)?;
    Ok(mc::estimate_direct_prob(m, d, i, &cfg).map_err(value_error)?.into())
}

#[pyfunction]
fn protocol_names() -> Vec<&'static str> {
    PROTOCOL_NAMES.to_vec()
}

/// Runs one simulation described by config text.
#[pyfunction]
#[pyo3(signature = (config_text, protocol = None, seed = None))]
fn simulate(py: Python<'_>, config_text: &str, protocol: Option<&str>, seed: Option<u64>) -> PyResult<PySimMetrics> {
    let c = parse_config(config_text)?;
    let name = protocol.unwrap_or_else(|| c.str_or("sim.protocol", "aodv")).to_string();
    let cfg: ProtocolConfig = config::protocol(&c, &name)
        .map_err(value_error)?
        .ok_or_else(|| value_error(format!("unknown protocol `{name}`")))?;
    let mut scenario = config::scenario(&c).map_err(value_error)?;
    if let Some(s) = seed {
        scenario.seed = s;
    }
    let run = py
        .detach(|| protocols::simulate(&scenario, &cfg, RunOptions::default()))
        .map_err(value_error)?;
    let m = run.metrics;
    Ok(PySimMetrics {
        protocol: name,
        seed: scenario.seed,
        duration: m.duration,
        data_sent: m.data_sent,
        data_delivered: m.data_delivered,
        bytes_delivered: m.bytes_delivered,
        control_transmissions: m.control_transmissions,
        throughput: m.throughput,
        e2ed: m.e2ed,
        nrl: m.nrl,
        data_in_flight: run.data_in_flight,
    })
}

/// Text of the `analytic` command for config text.
#[pyfunction]
fn analytic_report(config_text: &str) -> PyResult<String> {
    let c = parse_config(config_text)?;
    let mut out = Vec::new();
    harness::cmd_analytic(&c, None, &mut out).map_err(value_error)?;
    String::from_utf8(out).map_err(value_error)
}

/// Writes one simulation's CSV row (and optionally its trace) like the `sim` command.
#[pyfunction]
#[pyo3(signature = (config_text, out, protocol = None, seed = None, trace = None))]
fn sim_to_csv(
    config_text: &str,
    out: std::path::PathBuf,
    protocol: Option<&str>,
    seed: Option<u64>,
    trace: Option<std::path::PathBuf>,
) -> PyResult<String> {
    let c = parse_config(config_text)?;
    let args = SimArgs {
        protocol,
        seed,
        trace: trace.as_deref(),
        out: Some(&out),
    };
    let mut text = Vec::new();
    harness::cmd_sim(&c, &args, &mut text).map_err(value_error)?;
    String::from_utf8(text).map_err(value_error)
}

#[pymodule]
fn stripnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStripModel>()?;
    m.add_class::<PyConnectivityReport>()?;
    m.add_class::<PyKinematicsConfig>()?;
    m.add_class::<PyLinkTimeReport>()?;
    m.add_class::<PyMcEstimate>()?;
    m.add_class::<PySimMetrics>()?;
    m.add_function(wrap_pyfunction!(derive_m, m)?)?;
    m.add_function(wrap_pyfunction!(direct_comm_probability, m)?)?;
    m.add_function(wrap_pyfunction!(stream_intensity, m)?)?;
    m.add_function(wrap_pyfunction!(segment_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(segment_pgf, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_direct_prob, m)?)?;
    m.add_function(wrap_pyfunction!(protocol_names, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_report, m)?)?;
    m.add_function(wrap_pyfunction!(sim_to_csv, m)?)?;
    Ok(())
}
