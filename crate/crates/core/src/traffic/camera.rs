use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrafficError;
use crate::scenario::{FlowId, Packet};
use crate::time::SimTime;

pub(super) fn default_packets_per_burst() -> u32 {
    26
}
pub(super) fn default_packet_bytes() -> u32 {
    1500
}
pub(super) fn default_interval_mean() -> f64 {
    0.278
}
pub(super) fn default_interval_halfwidth() -> f64 {
    0.06
}
pub(super) fn default_intra_burst_gap() -> f64 {
    // 1500 B serialized at 100 Mbps
    0.000_12
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Resolution {
    #[serde(rename = "704x576")]
    Cif4,
    #[serde(rename = "352x288")]
    Cif,
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resolution::Cif4 => "704x576",
            Resolution::Cif => "352x288",
        })
    }
}

impl FromStr for Resolution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('×', "x").as_str() {
            "704x576" => Ok(Resolution::Cif4),
            "352x288" => Ok(Resolution::Cif),
            other => Err(format!("unknown resolution {other}")),
        }
    }
}

/// Measured packets per burst of the reference IP camera at 1 Mbps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BurstTableEntry {
    pub resolution: Resolution,
    pub compression_kbytes: u32,
    pub packets_per_burst: u32,
}

const fn entry(resolution: Resolution, compression_kbytes: u32, packets_per_burst: u32) -> BurstTableEntry {
    BurstTableEntry { resolution, compression_kbytes, packets_per_burst }
}

pub const BURST_TABLE: [BurstTableEntry; 5] = [
    entry(Resolution::Cif4, 50, 41),
    entry(Resolution::Cif4, 32, 26),
    entry(Resolution::Cif4, 16, 10),
    entry(Resolution::Cif, 13, 9),
    entry(Resolution::Cif, 4, 3),
];

pub fn packets_per_burst(resolution: Resolution, compression_kbytes: u32) -> Result<u32, TrafficError> {
    BURST_TABLE
        .iter()
        .find(|e| e.resolution == resolution && e.compression_kbytes == compression_kbytes)
        .map(|e| e.packets_per_burst)
        .ok_or_else(|| TrafficError::UnknownTableEntry { resolution: resolution.to_string(), compression_kbytes })
}

/// Bursty video-surveillance source: one fragmented frame per burst, bursts
/// separated by a uniformly jittered interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraParams {
    pub packets_per_burst: u32,
    pub packet_bytes: u32,
    pub burst_interval_mean_s: f64,
    /// Intervals are drawn from `[mean - halfwidth, mean + halfwidth]`.
    pub burst_interval_halfwidth_s: f64,
    pub intra_burst_gap_s: f64,
}

impl Default for CameraParams {
    fn default() -> Self {
        CameraParams {
            packets_per_burst: default_packets_per_burst(),
            packet_bytes: default_packet_bytes(),
            burst_interval_mean_s: default_interval_mean(),
            burst_interval_halfwidth_s: default_interval_halfwidth(),
            intra_burst_gap_s: default_intra_burst_gap(),
        }
    }
}

impl CameraParams {
    pub fn from_table(resolution: Resolution, compression_kbytes: u32) -> Result<Self, TrafficError> {
        Ok(CameraParams {
            packets_per_burst: packets_per_burst(resolution, compression_kbytes)?,
            ..CameraParams::default()
        })
    }

    pub fn nominal_rate_bps(&self) -> f64 {
        self.packets_per_burst as f64 * self.packet_bytes as f64 * 8.0 / self.burst_interval_mean_s
    }

    pub fn burst_span_s(&self) -> f64 {
        self.packets_per_burst.saturating_sub(1) as f64 * self.intra_burst_gap_s
    }

    pub(super) fn check(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if self.packets_per_burst == 0 {
            out.push(("packets_per_burst", "must be at least 1".to_string()));
        }
        if self.packet_bytes == 0 {
            out.push(("packet_bytes", "must be at least 1".to_string()));
        }
        if !(self.burst_interval_mean_s > 0.0 && self.burst_interval_mean_s.is_finite()) {
            out.push(("burst_interval_mean_s", "must be positive".to_string()));
        }
        if !(self.burst_interval_halfwidth_s >= 0.0 && self.burst_interval_halfwidth_s < self.burst_interval_mean_s) {
            out.push(("burst_interval_halfwidth_s", "must satisfy 0 <= halfwidth < mean".to_string()));
        }
        if !(self.intra_burst_gap_s >= 0.0) {
            out.push(("intra_burst_gap_s", "must be non-negative".to_string()));
        } else if self.burst_span_s() > self.burst_interval_mean_s - self.burst_interval_halfwidth_s {
            out.push(("intra_burst_gap_s", "a burst must end before the shortest inter-burst interval".to_string()));
        }
        out
    }
}

/// Bursts start at `start` and then every `U(mean ± halfwidth)` seconds;
/// packets within a burst are `intra_burst_gap_s` apart. Anything at or
/// after `until` is cut.
pub fn camera_stream(
    flow: FlowId,
    p: &CameraParams,
    start: SimTime,
    until: SimTime,
    seed: u64,
) -> Result<Vec<Packet>, TrafficError> {
    if start >= until {
        return Err(TrafficError::EmptyInterval { start, until });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = SimTime::from_secs_f64(p.burst_interval_mean_s - p.burst_interval_halfwidth_s).as_nanos();
    let hi = SimTime::from_secs_f64(p.burst_interval_mean_s + p.burst_interval_halfwidth_s).as_nanos();
    let gap = SimTime::from_secs_f64(p.intra_burst_gap_s).as_nanos();

    let mut out = Vec::new();
    let mut burst_start = start.as_nanos();
    let mut seq = 0u64;
    while burst_start < until.as_nanos() {
        for j in 0..p.packets_per_burst as u64 {
            let t = burst_start + j * gap;
            if t >= until.as_nanos() {
                break;
            }
            out.push(Packet { flow_id: flow, seq, size_bytes: p.packet_bytes, created_at: SimTime::from_nanos(t) });
            seq += 1;
        }
        burst_start += rng.gen_range(lo..=hi).max(1);
    }
    Ok(out)
}
