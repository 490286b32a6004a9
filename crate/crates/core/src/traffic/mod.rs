//! Packet stream generators for each traffic source type.
//!
//! Every generator is a pure function of its parameters, the time window and
//! (where randomness is involved) a 64-bit seed. Streams are returned as
//! vectors ordered by creation time with consecutive sequence numbers from 0.

mod camera;
mod synth;
mod trace;
mod voip;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{FlowId, Packet};
use crate::time::SimTime;

pub use camera::{camera_stream, packets_per_burst, BurstTableEntry, CameraParams, Resolution, BURST_TABLE};
pub use synth::{synth_vc_stream, SynthVcParams, FRAME_SIZE_CAP};
pub use trace::{load_trace, parse_trace, trace_span, trace_stream, TraceRecord, TRACE_HEADER};
pub use voip::{voip_stream, VoipParams};

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("no burst table entry for {resolution} at {compression_kbytes} kbytes")]
    UnknownTableEntry { resolution: String, compression_kbytes: u32 },
    #[error("empty generation window: start {start} is not before end {until}")]
    EmptyInterval { start: SimTime, until: SimTime },
    #[error("trace line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("trace line {line}: timestamp goes backwards")]
    NonMonotonicTimestamp { line: u64 },
    #[error("trace has no records")]
    EmptyTrace,
    #[error("cannot read trace {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("trace {0} has not been loaded, its rate is unknown")]
    UnresolvableRate(String),
    #[error("trace {0} spans zero time, its rate is undefined")]
    ZeroSpanTrace(String),
}

/// The four supported source types.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FlowKind {
    Voip,
    Camera,
    Trace,
    SynthVc,
}

impl FlowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FlowKind::Voip => "voip",
            FlowKind::Camera => "camera",
            FlowKind::Trace => "trace",
            FlowKind::SynthVc => "synth_vc",
        }
    }

    /// Trace replay and the synthetic substitute both stand for videoconference traffic.
    pub fn is_videoconference(self) -> bool {
        matches!(self, FlowKind::Trace | FlowKind::SynthVc)
    }
}

impl std::fmt::Display for FlowKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A recorded packet trace, replayed verbatim.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSource {
    pub path: PathBuf,
    /// Restart from the beginning when the trace runs out.
    pub looped: bool,
    pub records: Option<Arc<Vec<TraceRecord>>>,
}

impl TraceSource {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        TraceSource { path: path.into(), looped: false, records: None }
    }

    pub fn with_records(records: Vec<TraceRecord>) -> Self {
        TraceSource { path: PathBuf::new(), looped: false, records: Some(Arc::new(records)) }
    }

    fn records(&self) -> Result<&[TraceRecord], TrafficError> {
        self.records
            .as_deref()
            .map(Vec::as_slice)
            .ok_or_else(|| TrafficError::UnresolvableRate(self.path.display().to_string()))
    }

    fn nominal_rate_bps(&self) -> Result<f64, TrafficError> {
        let records = self.records()?;
        let span = trace_span(records);
        if span == SimTime::ZERO {
            return Err(TrafficError::ZeroSpanTrace(self.path.display().to_string()));
        }
        let bits: f64 = records.iter().map(|r| r.size_bytes as f64 * 8.0).sum();
        Ok(bits / span.as_secs_f64())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Voip(VoipParams),
    Camera(CameraParams),
    Trace(TraceSource),
    SynthVc(SynthVcParams),
}

impl Source {
    pub fn kind(&self) -> FlowKind {
        match self {
            Source::Voip(_) => FlowKind::Voip,
            Source::Camera(_) => FlowKind::Camera,
            Source::Trace(_) => FlowKind::Trace,
            Source::SynthVc(_) => FlowKind::SynthVc,
        }
    }

    /// Mean rate implied by the source parameters alone.
    pub fn nominal_rate_bps(&self) -> Result<f64, TrafficError> {
        match self {
            Source::Voip(p) => Ok(p.nominal_rate_bps()),
            Source::Camera(p) => Ok(p.nominal_rate_bps()),
            Source::Trace(t) => t.nominal_rate_bps(),
            Source::SynthVc(p) => Ok(p.mean_bps),
        }
    }

    /// Reads the trace file for trace sources that are not loaded yet.
    pub fn load_trace(&mut self, base_dir: &Path) -> Result<(), TrafficError> {
        if let Source::Trace(t) = self {
            if t.records.is_none() {
                let path = if t.path.is_absolute() { t.path.clone() } else { base_dir.join(&t.path) };
                t.records = Some(Arc::new(load_trace(&path)?));
            }
        }
        Ok(())
    }
}

/// One traffic source in a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawFlow", into = "RawFlow")]
pub struct FlowSpec {
    pub label: Option<String>,
    /// Replaces the computed nominal rate. Generation is rescaled in time
    /// (or, for the synthetic source, in frame size) so the stream's mean
    /// rate matches.
    pub rate_override_bps: Option<f64>,
    pub source: Source,
}

impl FlowSpec {
    pub fn new(source: Source) -> Self {
        FlowSpec { label: None, rate_override_bps: None, source }
    }

    pub fn with_rate_override(mut self, bps: f64) -> Self {
        self.rate_override_bps = Some(bps);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn kind(&self) -> FlowKind {
        self.source.kind()
    }

    pub fn offered_rate_bps(&self) -> Result<f64, TrafficError> {
        match self.rate_override_bps {
            Some(r) => Ok(r),
            None => self.source.nominal_rate_bps(),
        }
    }

    /// Parameter problems as `(field, reason)` pairs; empty when valid.
    pub fn check(&self) -> Vec<(&'static str, String)> {
        let mut out = match &self.source {
            Source::Voip(p) => p.check(),
            Source::Camera(p) => p.check(),
            Source::SynthVc(p) => p.check(),
            Source::Trace(t) => {
                if t.path.as_os_str().is_empty() && t.records.is_none() {
                    vec![("path", "trace path is empty".to_string())]
                } else {
                    Vec::new()
                }
            }
        };
        if let Some(r) = self.rate_override_bps {
            if !(r > 0.0 && r.is_finite()) {
                out.push(("rate_override_bps", format!("must be positive, got {r}")));
            }
        }
        out
    }

    /// Generates this flow's arrivals in `[start, until)`.
    pub fn generate(
        &self,
        flow: FlowId,
        start: SimTime,
        until: SimTime,
        seed: u64,
    ) -> Result<Vec<Packet>, TrafficError> {
        let scale = match self.rate_override_bps {
            Some(target) => self.source.nominal_rate_bps()? / target,
            None => 1.0,
        };
        match &self.source {
            Source::Voip(p) => {
                let p = VoipParams { inter_packet_s: p.inter_packet_s * scale, ..*p };
                voip_stream(flow, &p, start, until)
            }
            Source::Camera(p) => {
                let p = CameraParams {
                    burst_interval_mean_s: p.burst_interval_mean_s * scale,
                    burst_interval_halfwidth_s: p.burst_interval_halfwidth_s * scale,
                    ..*p
                };
                camera_stream(flow, &p, start, until, seed)
            }
            Source::Trace(t) => {
                let records = t.records()?;
                if records.is_empty() {
                    return Err(TrafficError::EmptyTrace);
                }
                Ok(trace_stream(flow, records, start, until, t.looped, scale))
            }
            Source::SynthVc(p) => {
                let p = SynthVcParams { mean_bps: self.rate_override_bps.unwrap_or(p.mean_bps), ..*p };
                synth_vc_stream(flow, &p, start, until, seed)
            }
        }
    }
}

// Flat JSON form: `{"kind": "camera", "label": ..., "rate_override_bps": ..., <params>}`.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawFlow {
    Voip {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate_override_bps: Option<f64>,
        #[serde(default = "voip::default_inter_packet_s")]
        inter_packet_s: f64,
        #[serde(default = "voip::default_packet_bytes")]
        packet_bytes: u32,
    },
    Camera {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate_override_bps: Option<f64>,
        #[serde(default = "camera::default_packets_per_burst")]
        packets_per_burst: u32,
        #[serde(default = "camera::default_packet_bytes")]
        packet_bytes: u32,
        #[serde(default = "camera::default_interval_mean")]
        burst_interval_mean_s: f64,
        #[serde(default = "camera::default_interval_halfwidth")]
        burst_interval_halfwidth_s: f64,
        #[serde(default = "camera::default_intra_burst_gap")]
        intra_burst_gap_s: f64,
    },
    Trace {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate_override_bps: Option<f64>,
        path: PathBuf,
        #[serde(default, rename = "loop")]
        looped: bool,
    },
    SynthVc {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate_override_bps: Option<f64>,
        #[serde(default = "synth::default_mean_bps")]
        mean_bps: f64,
        #[serde(default = "synth::default_fps")]
        fps: f64,
        #[serde(default = "synth::default_mtu")]
        mtu_bytes: u32,
        #[serde(default = "synth::default_intra_frame_gap")]
        intra_frame_gap_s: f64,
    },
}

impl From<RawFlow> for FlowSpec {
    fn from(raw: RawFlow) -> Self {
        match raw {
            RawFlow::Voip { label, rate_override_bps, inter_packet_s, packet_bytes } => {
                FlowSpec { label, rate_override_bps, source: Source::Voip(VoipParams { inter_packet_s, packet_bytes }) }
            }
            RawFlow::Camera {
                label,
                rate_override_bps,
                packets_per_burst,
                packet_bytes,
                burst_interval_mean_s,
                burst_interval_halfwidth_s,
                intra_burst_gap_s,
            } => FlowSpec {
                label,
                rate_override_bps,
                source: Source::Camera(CameraParams {
                    packets_per_burst,
                    packet_bytes,
                    burst_interval_mean_s,
                    burst_interval_halfwidth_s,
                    intra_burst_gap_s,
                }),
            },
            RawFlow::Trace { label, rate_override_bps, path, looped } => FlowSpec {
                label,
                rate_override_bps,
                source: Source::Trace(TraceSource { path, looped, records: None }),
            },
            RawFlow::SynthVc { label, rate_override_bps, mean_bps, fps, mtu_bytes, intra_frame_gap_s } => FlowSpec {
                label,
                rate_override_bps,
                source: Source::SynthVc(SynthVcParams { mean_bps, fps, mtu_bytes, intra_frame_gap_s }),
            },
        }
    }
}

impl From<FlowSpec> for RawFlow {
    fn from(f: FlowSpec) -> RawFlow {
        let FlowSpec { label, rate_override_bps, source } = f;
        match source {
            Source::Voip(p) => RawFlow::Voip {
                label,
                rate_override_bps,
                inter_packet_s: p.inter_packet_s,
                packet_bytes: p.packet_bytes,
            },
            Source::Camera(p) => RawFlow::Camera {
                label,
                rate_override_bps,
                packets_per_burst: p.packets_per_burst,
                packet_bytes: p.packet_bytes,
                burst_interval_mean_s: p.burst_interval_mean_s,
                burst_interval_halfwidth_s: p.burst_interval_halfwidth_s,
                intra_burst_gap_s: p.intra_burst_gap_s,
            },
            Source::Trace(t) => RawFlow::Trace { label, rate_override_bps, path: t.path, looped: t.looped },
            Source::SynthVc(p) => RawFlow::SynthVc {
                label,
                rate_override_bps,
                mean_bps: p.mean_bps,
                fps: p.fps,
                mtu_bytes: p.mtu_bytes,
                intra_frame_gap_s: p.intra_frame_gap_s,
            },
        }
    }
}
