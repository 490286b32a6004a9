use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::TrafficError;
use crate::scenario::{FlowId, Packet};
use crate::time::SimTime;

pub const TRACE_HEADER: [&str; 2] = ["t_s", "size_bytes"];

/// One captured packet, timed relative to the first packet of its trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub t: SimTime,
    pub size_bytes: u32,
}

impl TraceRecord {
    pub fn new(t: SimTime, size_bytes: u32) -> Self {
        TraceRecord { t, size_bytes }
    }

    pub fn t_s(&self) -> f64 {
        self.t.as_secs_f64()
    }
}

/// Time of the last record (the first is always at zero).
pub fn trace_span(records: &[TraceRecord]) -> SimTime {
    records.last().map_or(SimTime::ZERO, |r| r.t)
}

pub fn load_trace(path: &Path) -> Result<Vec<TraceRecord>, TrafficError> {
    let file = File::open(path).map_err(|source| TrafficError::Io { path: path.display().to_string(), source })?;
    parse_trace(file)
}

/// Parses a `t_s,size_bytes` CSV and shifts timestamps so the first is zero.
pub fn parse_trace(input: impl Read) -> Result<Vec<TraceRecord>, TrafficError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let header = reader.headers().map_err(|e| TrafficError::Parse { line: 1, message: e.to_string() })?;
    if header.iter().collect::<Vec<_>>() != TRACE_HEADER {
        return Err(TrafficError::Parse { line: 1, message: format!("expected header `{}`", TRACE_HEADER.join(",")) });
    }

    let mut raw: Vec<(f64, u32)> = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for row in reader.records() {
        let row = row
            .map_err(|e| TrafficError::Parse { line: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 2 {
            return Err(TrafficError::Parse { line, message: format!("expected 2 fields, found {}", row.len()) });
        }
        let t: f64 = row[0]
            .parse()
            .map_err(|_| TrafficError::Parse { line, message: format!("bad timestamp `{}`", &row[0]) })?;
        let size: u32 =
            row[1].parse().map_err(|_| TrafficError::Parse { line, message: format!("bad size `{}`", &row[1]) })?;
        if !t.is_finite() {
            return Err(TrafficError::Parse { line, message: format!("bad timestamp `{}`", &row[0]) });
        }
        if size == 0 {
            return Err(TrafficError::Parse { line, message: "size_bytes must be at least 1".to_string() });
        }
        if t < prev {
            return Err(TrafficError::NonMonotonicTimestamp { line });
        }
        prev = t;
        raw.push((t, size));
    }

    let t0 = raw.first().ok_or(TrafficError::EmptyTrace)?.0;
    Ok(raw.into_iter().map(|(t, size)| TraceRecord::new(SimTime::from_secs_f64(t - t0), size)).collect())
}

/// Replays `records` starting at `start`, with every offset multiplied by
/// `time_scale`. In loop mode the trace restarts shifted by its span.
pub fn trace_stream(
    flow: FlowId,
    records: &[TraceRecord],
    start: SimTime,
    until: SimTime,
    looped: bool,
    time_scale: f64,
) -> Vec<Packet> {
    let scaled = |t: SimTime| {
        if time_scale == 1.0 {
            t
        } else {
            SimTime::from_secs_f64(t.as_secs_f64() * time_scale)
        }
    };
    let span = scaled(trace_span(records));
    let mut out = Vec::new();
    let mut base = start;
    'replay: loop {
        for r in records {
            let t = base + scaled(r.t);
            if t >= until {
                break 'replay;
            }
            out.push(Packet { flow_id: flow, seq: out.len() as u64, size_bytes: r.size_bytes, created_at: t });
        }
        if !looped || span == SimTime::ZERO {
            break;
        }
        base += span;
    }
    out
}
