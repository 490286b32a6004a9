//! Python bindings for `burstgate_core`.
//!
//! Configuration and domain errors raise `ValueError`. A failed invariant
//! check in instrumented mode raises `RuntimeError`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use burstgate_core::engine::{self, EngineError, EngineOptions, RunOptions};
use burstgate_core::metrics::{self, EModelParams};
use burstgate_core::queue;
use burstgate_core::traffic::{self, Resolution};
use burstgate_core::{BufferCapacity, BufferMode, RunConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn engine_err(e: EngineError) -> PyErr {
    if e.is_invariant_violation() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        value_err(e)
    }
}

/// A validated simulation scenario.
#[pyclass(name = "Scenario", module = "burstgate", frozen)]
struct PyScenario {
    inner: burstgate_core::Scenario,
}

#[pymethods]
impl PyScenario {
    /// Parse and validate a scenario from JSON text. Trace flows are not
    /// loaded; use `load` for scenarios that reference trace files.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let s = burstgate_core::Scenario::from_json(text).map_err(value_err)?;
        let inner = s.validate().map_err(value_err)?;
        Ok(PyScenario { inner })
    }

    /// Read, validate and load traces for a scenario file.
    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        let inner = burstgate_core::Scenario::load(&path).map_err(value_err)?;
        Ok(PyScenario { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn capacity_bps(&self) -> u64 {
        self.inner.link.capacity_bps
    }

    #[getter]
    fn buffer_limit(&self) -> u64 {
        self.inner.buffer.limit
    }

    #[getter]
    fn buffer_mode(&self) -> &'static str {
        match self.inner.buffer.mode {
            BufferMode::Packets => "packets",
            BufferMode::Bytes => "bytes",
        }
    }

    #[getter]
    fn duration_s(&self) -> f64 {
        self.inner.duration_s
    }

    #[getter]
    fn flow_kinds(&self) -> Vec<&'static str> {
        self.inner.flows.iter().map(|f| f.kind().as_str()).collect()
    }

    fn offered_load_bps(&self) -> PyResult<f64> {
        self.inner.offered_load_bps().map_err(value_err)
    }

    fn utilization(&self) -> PyResult<f64> {
        self.inner.utilization().map_err(value_err)
    }

    /// Copy with a different buffer limit, in the current mode's unit.
    fn with_buffer_limit(&self, limit: u64) -> PyResult<Self> {
        let mut s = self.inner.clone();
        s.buffer = BufferCapacity { mode: s.buffer.mode, limit };
        Ok(PyScenario { inner: s.validate().map_err(value_err)? })
    }

    fn with_capacity(&self, capacity_bps: u64) -> PyResult<Self> {
        let mut s = self.inner.clone();
        s.link.capacity_bps = capacity_bps;
        Ok(PyScenario { inner: s.validate().map_err(value_err)? })
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(capacity_bps={}, buffer={} {}, flows={:?}, duration_s={})",
            self.inner.link.capacity_bps,
            self.inner.buffer.limit,
            self.buffer_mode(),
            self.flow_kinds(),
            self.inner.duration_s
        )
    }
}

/// Counters for one flow in one iteration.
#[pyclass(name = "FlowResult", module = "burstgate", frozen, get_all)]
struct PyFlowResult {
    flow_id: u32,
    kind: &'static str,
    start_offset_s: f64,
    sent: u64,
    delivered: u64,
    dropped: u64,
    residual: u64,
    loss_rate: f64,
    mean_queue_delay_s: f64,
}

#[pymethods]
impl PyFlowResult {
    fn __repr__(&self) -> String {
        format!(
            "FlowResult(flow_id={}, kind={:?}, sent={}, dropped={}, loss_rate={:.6})",
            self.flow_id, self.kind, self.sent, self.dropped, self.loss_rate
        )
    }
}

#[pyclass(name = "IterationResult", module = "burstgate", frozen)]
struct PyIterationResult {
    inner: engine::IterationResult,
}

#[pymethods]
impl PyIterationResult {
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn measured_utilization(&self) -> f64 {
        self.inner.measured_utilization
    }

    #[getter]
    fn aggregate_loss_rate(&self) -> f64 {
        self.inner.aggregate.loss_rate()
    }

    #[getter]
    fn flows(&self) -> Vec<PyFlowResult> {
        self.inner
            .per_flow
            .iter()
            .map(|f| PyFlowResult {
                flow_id: f.flow_id.0,
                kind: f.kind.as_str(),
                start_offset_s: f.start_offset_s,
                sent: f.stats.sent,
                delivered: f.stats.delivered,
                dropped: f.stats.dropped,
                residual: f.stats.residual,
                loss_rate: f.stats.loss_rate(),
                mean_queue_delay_s: f.stats.mean_queue_delay_s(),
            })
            .collect()
    }

    /// `(flow_id, seq)` of every dropped packet, if drops were recorded.
    #[getter]
    fn drops(&self) -> Vec<(u32, u64)> {
        self.inner.drops.iter().map(|d| (d.flow_id.0, d.seq)).collect()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __repr__(&self) -> String {
        format!(
            "IterationResult(seed={}, flows={}, aggregate_loss_rate={:.6}, measured_utilization={:.4})",
            self.inner.seed,
            self.inner.per_flow.len(),
            self.aggregate_loss_rate(),
            self.inner.measured_utilization
        )
    }
}

#[pyfunction]
#[pyo3(signature = (scenario, seed, instrumented = false, record_drops = false))]
fn run_iteration(
    py: Python<'_>,
    scenario: &PyScenario,
    seed: u64,
    instrumented: bool,
    record_drops: bool,
) -> PyResult<PyIterationResult> {
    let opts = EngineOptions { instrumented, record_drops, ..EngineOptions::default() };
    let inner = py.detach(|| engine::run_iteration_with(&scenario.inner, seed, &opts)).map_err(engine_err)?;
    Ok(PyIterationResult { inner })
}

/// Runs `iterations` seeded iterations. `threads=None` follows
/// BURSTGATE_THREADS; 0 uses every core.
#[pyfunction]
#[pyo3(signature = (scenario, iterations, master_seed, threads = None, instrumented = false))]
fn run_many(
    py: Python<'_>,
    scenario: &PyScenario,
    iterations: usize,
    master_seed: u64,
    threads: Option<usize>,
    instrumented: bool,
) -> PyResult<Vec<PyIterationResult>> {
    let cfg = RunConfig::new(iterations, master_seed).validate().map_err(value_err)?;
    let opts = RunOptions {
        threads: threads.unwrap_or_else(engine::threads_from_env),
        engine: EngineOptions { instrumented, ..EngineOptions::default() },
    };
    let results = py.detach(|| engine::run_many_with(&scenario.inner, &cfg, &opts)).map_err(engine_err)?;
    Ok(results.into_iter().map(|inner| PyIterationResult { inner }).collect())
}

#[pyfunction]
fn bdp_size_bytes(capacity_bps: f64, rtt_s: f64) -> u64 {
    queue::bdp_size_bytes(capacity_bps, rtt_s)
}

#[pyfunction]
fn small_buffer_size_bytes(capacity_bps: f64, rtt_s: f64, n_flows: u32) -> PyResult<u64> {
    queue::small_buffer_size_bytes(capacity_bps, rtt_s, n_flows).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (preferred = None))]
fn tiny_buffer_size_packets(preferred: Option<u32>) -> PyResult<u32> {
    queue::tiny_buffer_size_packets(preferred).map_err(value_err)
}

fn emodel_params(r0: f64, ie: f64, bpl: f64, is_impairment: f64, advantage: f64) -> PyResult<EModelParams> {
    let p = EModelParams { r0, ie, bpl, is_impairment, advantage, ..EModelParams::default() };
    p.check().map_err(PyValueError::new_err)?;
    Ok(p)
}

/// Transmission rating for a loss percentage and one-way delay. No codec
/// allowance is added.
#[pyfunction]
#[pyo3(signature = (loss_percent, delay_ms, r0 = 93.2, ie = 11.0, bpl = 19.0, is_impairment = 0.0, advantage = 0.0))]
fn r_factor(
    loss_percent: f64,
    delay_ms: f64,
    r0: f64,
    ie: f64,
    bpl: f64,
    is_impairment: f64,
    advantage: f64,
) -> PyResult<f64> {
    let p = emodel_params(r0, ie, bpl, is_impairment, advantage)?;
    Ok(metrics::r_factor(loss_percent, delay_ms, &p))
}

#[pyfunction]
#[pyo3(signature = (loss_percent, ie = 11.0, bpl = 19.0))]
fn ie_eff(loss_percent: f64, ie: f64, bpl: f64) -> PyResult<f64> {
    let p = emodel_params(93.2, ie, bpl, 0.0, 0.0)?;
    Ok(metrics::ie_eff(loss_percent, &p))
}

#[pyfunction]
fn mos_from_r(r: f64) -> f64 {
    metrics::mos_from_r(r)
}

#[pyfunction]
fn quality_band(mos: f64) -> &'static str {
    metrics::quality_band(mos).name()
}

/// Packets per camera burst for a resolution ("704x576" or "352x288") and
/// compression level in kilobytes.
#[pyfunction]
fn packets_per_burst(resolution: &str, compression_kbytes: u32) -> PyResult<u32> {
    let res: Resolution = resolution.parse().map_err(value_err)?;
    traffic::packets_per_burst(res, compression_kbytes).map_err(value_err)
}

/// Bins `values` on `edges`. Returns `(counts, underflow, overflow)`.
#[pyfunction]
fn histogram(values: Vec<f64>, edges: Vec<f64>) -> PyResult<(Vec<u64>, u64, u64)> {
    let h = metrics::histogram(&values, &edges).map_err(value_err)?;
    Ok((h.counts, h.underflow, h.overflow))
}

#[pymodule]
fn burstgate(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyIterationResult>()?;
    m.add_class::<PyFlowResult>()?;
    m.add_function(wrap_pyfunction!(run_iteration, m)?)?;
    m.add_function(wrap_pyfunction!(run_many, m)?)?;
    m.add_function(wrap_pyfunction!(bdp_size_bytes, m)?)?;
    m.add_function(wrap_pyfunction!(small_buffer_size_bytes, m)?)?;
    m.add_function(wrap_pyfunction!(tiny_buffer_size_packets, m)?)?;
    m.add_function(wrap_pyfunction!(r_factor, m)?)?;
    m.add_function(wrap_pyfunction!(ie_eff, m)?)?;
    m.add_function(wrap_pyfunction!(mos_from_r, m)?)?;
    m.add_function(wrap_pyfunction!(quality_band, m)?)?;
    m.add_function(wrap_pyfunction!(packets_per_burst, m)?)?;
    m.add_function(wrap_pyfunction!(histogram, m)?)?;
    m.add("THREADS_ENV", engine::THREADS_ENV)?;
    Ok(())
}
