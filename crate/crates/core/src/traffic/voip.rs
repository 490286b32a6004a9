use serde::{Deserialize, Serialize};

use super::TrafficError;
use crate::scenario::{FlowId, Packet};
use crate::time::SimTime;

pub(super) fn default_inter_packet_s() -> f64 {
    0.020
}

pub(super) fn default_packet_bytes() -> u32 {
    60
}

/// Constant-bit-rate voice source. Defaults model G.729 with two 10 ms
/// frames per packet: 20 ms spacing, 60 bytes on the wire.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoipParams {
    pub inter_packet_s: f64,
    pub packet_bytes: u32,
}

impl Default for VoipParams {
    fn default() -> Self {
        VoipParams { inter_packet_s: default_inter_packet_s(), packet_bytes: default_packet_bytes() }
    }
}

impl VoipParams {
    pub fn nominal_rate_bps(&self) -> f64 {
        self.packet_bytes as f64 * 8.0 / self.inter_packet_s
    }

    pub(super) fn check(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if !(self.inter_packet_s > 0.0 && self.inter_packet_s.is_finite()) {
            out.push(("inter_packet_s", format!("must be positive, got {}", self.inter_packet_s)));
        }
        if self.packet_bytes == 0 {
            out.push(("packet_bytes", "must be at least 1".to_string()));
        }
        out
    }
}

/// Packets at `start + k * inter_packet` for every `k` landing strictly before `until`.
pub fn voip_stream(flow: FlowId, p: &VoipParams, start: SimTime, until: SimTime) -> Result<Vec<Packet>, TrafficError> {
    if start >= until {
        return Err(TrafficError::EmptyInterval { start, until });
    }
    let step = SimTime::from_secs_f64(p.inter_packet_s).as_nanos().max(1);
    let span = (until - start).as_nanos();
    let count = span.div_ceil(step);
    Ok((0..count)
        .map(|k| Packet {
            flow_id: flow,
            seq: k,
            size_bytes: p.packet_bytes,
            created_at: SimTime::from_nanos(start.as_nanos() + k * step),
        })
        .collect())
}
