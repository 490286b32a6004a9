//! Shared domain types: packets, the bottleneck link, buffer capacity and the
//! scenario that ties them to a list of traffic sources.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::time::SimTime;
use crate::traffic::{FlowSpec, TrafficError};

/// Default width of the random start-offset window, in seconds.
pub const DEFAULT_START_WINDOW_S: f64 = 5.0;

/// Index of a flow within its scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlowId(pub u32);

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A simulated datagram as it arrives at the bottleneck buffer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Packet {
    pub flow_id: FlowId,
    pub seq: u64,
    /// Wire size including all headers.
    pub size_bytes: u32,
    pub created_at: SimTime,
}

/// Identity of a packet across runs: enough to compare drop sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PacketId {
    pub flow_id: FlowId,
    pub seq: u64,
}

impl Packet {
    pub fn id(&self) -> PacketId {
        PacketId { flow_id: self.flow_id, seq: self.seq }
    }
}

/// The bottleneck output link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    #[serde(deserialize_with = "de_bps")]
    pub capacity_bps: u64,
    /// Fixed one-way external delay. Only used when scoring VoIP calls.
    #[serde(default)]
    pub network_delay_ms: f64,
}

impl LinkSpec {
    pub fn new(capacity_bps: u64) -> Self {
        LinkSpec { capacity_bps, network_delay_ms: 0.0 }
    }
}

/// Accepts integral or floating JSON numbers (e.g. `3.5e6`) and rounds to whole bits/s.
fn de_bps<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
    let v = f64::deserialize(d)?;
    if !v.is_finite() || v < 0.0 {
        return Err(serde::de::Error::custom(format!("capacity_bps must be a non-negative number, got {v}")));
    }
    Ok(v.round() as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BufferMode {
    Packets,
    Bytes,
}

/// Drop-tail buffer limit. The packet in service is not counted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BufferCapacity {
    pub mode: BufferMode,
    pub limit: u64,
}

impl BufferCapacity {
    pub fn packets(limit: u64) -> Self {
        BufferCapacity { mode: BufferMode::Packets, limit }
    }

    pub fn bytes(limit: u64) -> Self {
        BufferCapacity { mode: BufferMode::Bytes, limit }
    }

    /// A millisecond-denominated buffer expressed in bytes at the given link rate.
    pub fn from_millis(ms: f64, capacity_bps: u64) -> Self {
        let limit = (ms * capacity_bps as f64 / 8000.0).floor() as u64;
        BufferCapacity::bytes(limit.max(1))
    }
}

/// One experiment: a bottleneck, its buffer and the competing flows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub link: LinkSpec,
    pub buffer: BufferCapacity,
    pub flows: Vec<FlowSpec>,
    pub duration_s: f64,
    #[serde(default = "default_start_window")]
    pub start_window_s: f64,
}

fn default_start_window() -> f64 {
    DEFAULT_START_WINDOW_S
}

/// A single reason a scenario was rejected.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum Violation {
    #[error("flows: scenario has no flows")]
    EmptyFlows,
    #[error("duration_s: must be positive, got {0}")]
    NonPositiveDuration(f64),
    #[error("start_window_s: must satisfy 0 <= window < duration ({window} vs {duration})")]
    StartWindowExceedsDuration { window: f64, duration: f64 },
    #[error("link.capacity_bps: must be positive")]
    ZeroCapacity,
    #[error("link.network_delay_ms: must be non-negative, got {0}")]
    NegativeNetworkDelay(f64),
    #[error("buffer.limit: must be at least 1")]
    ZeroBufferLimit,
    #[error("flows[{index}].{field}: {reason}")]
    InvalidFlow { index: usize, field: &'static str, reason: String },
}

impl Violation {
    /// Dotted path of the offending field.
    pub fn field(&self) -> String {
        match self {
            Violation::EmptyFlows => "flows".into(),
            Violation::NonPositiveDuration(_) => "duration_s".into(),
            Violation::StartWindowExceedsDuration { .. } => "start_window_s".into(),
            Violation::ZeroCapacity => "link.capacity_bps".into(),
            Violation::NegativeNetworkDelay(_) => "link.network_delay_ms".into(),
            Violation::ZeroBufferLimit => "buffer.limit".into(),
            Violation::InvalidFlow { index, field, .. } => format!("flows[{index}].{field}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("invalid scenario: {}", .violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl ValidationError {
    pub fn contains(&self, pred: impl Fn(&Violation) -> bool) -> bool {
        self.violations.iter().any(pred)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse scenario {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
}

impl Scenario {
    /// Parses a scenario document. Unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Scenario, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Reads, parses and validates a scenario file, then loads any trace files
    /// it references (relative paths resolve against the scenario's directory).
    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let display = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: display.clone(), source })?;
        let scenario = Scenario::from_json(&text).map_err(|source| ScenarioError::Parse { path: display, source })?;
        let mut scenario = scenario.validate()?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        scenario.load_traces(base)?;
        Ok(scenario)
    }

    /// Loads every trace flow's records from disk.
    pub fn load_traces(&mut self, base_dir: &Path) -> Result<(), TrafficError> {
        for flow in &mut self.flows {
            flow.source.load_trace(base_dir)?;
        }
        Ok(())
    }

    /// Returns the scenario unchanged when every invariant holds.
    pub fn validate(self) -> Result<Scenario, ValidationError> {
        let mut violations = Vec::new();
        if self.flows.is_empty() {
            violations.push(Violation::EmptyFlows);
        }
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            violations.push(Violation::NonPositiveDuration(self.duration_s));
        }
        if !(self.start_window_s >= 0.0 && self.start_window_s < self.duration_s) {
            violations
                .push(Violation::StartWindowExceedsDuration { window: self.start_window_s, duration: self.duration_s });
        }
        if self.link.capacity_bps == 0 {
            violations.push(Violation::ZeroCapacity);
        }
        if !(self.link.network_delay_ms >= 0.0) {
            violations.push(Violation::NegativeNetworkDelay(self.link.network_delay_ms));
        }
        if self.buffer.limit == 0 {
            violations.push(Violation::ZeroBufferLimit);
        }
        for (index, flow) in self.flows.iter().enumerate() {
            for (field, reason) in flow.check() {
                violations.push(Violation::InvalidFlow { index, field, reason });
            }
        }
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(ValidationError { violations })
        }
    }

    pub fn duration(&self) -> SimTime {
        SimTime::from_secs_f64(self.duration_s)
    }

    pub fn start_window(&self) -> SimTime {
        SimTime::from_secs_f64(self.start_window_s)
    }

    /// Sum of the flows' nominal mean rates (overrides take precedence).
    pub fn offered_load_bps(&self) -> Result<f64, TrafficError> {
        offered_load_bps(&self.flows)
    }

    /// Offered load relative to link capacity. May exceed 1.
    pub fn utilization(&self) -> Result<f64, TrafficError> {
        Ok(self.offered_load_bps()? / self.link.capacity_bps as f64)
    }
}

/// Sum of nominal rates over an arbitrary flow list.
pub fn offered_load_bps(flows: &[FlowSpec]) -> Result<f64, TrafficError> {
    flows.iter().map(FlowSpec::offered_rate_bps).sum()
}

/// Batch settings for repeated independent runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub iterations: usize,
    pub master_seed: u64,
    #[serde(default = "default_delay_sweep")]
    pub mos_delay_sweep_ms: Vec<f64>,
}

pub fn default_delay_sweep() -> Vec<f64> {
    vec![0.0, 50.0, 100.0, 150.0, 200.0]
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum RunConfigError {
    #[error("iterations: must be at least 1")]
    ZeroIterations,
    #[error("mos_delay_sweep_ms: entries must be non-negative and strictly increasing")]
    BadDelaySweep,
}

impl RunConfig {
    pub fn new(iterations: usize, master_seed: u64) -> Self {
        RunConfig { iterations, master_seed, mos_delay_sweep_ms: default_delay_sweep() }
    }

    pub fn validate(self) -> Result<RunConfig, RunConfigError> {
        if self.iterations == 0 {
            return Err(RunConfigError::ZeroIterations);
        }
        let sweep = &self.mos_delay_sweep_ms;
        let ok = sweep.iter().all(|d| *d >= 0.0 && d.is_finite()) && sweep.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(RunConfigError::BadDelaySweep);
        }
        Ok(self)
    }
}
