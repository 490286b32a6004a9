use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrafficError;
use crate::scenario::{FlowId, Packet};
use crate::time::SimTime;

/// Frame sizes are capped at this multiple of the mean frame size.
pub const FRAME_SIZE_CAP: f64 = 12.0;

pub(super) fn default_mean_bps() -> f64 {
    2_000_000.0
}
pub(super) fn default_fps() -> f64 {
    30.0
}
pub(super) fn default_mtu() -> u32 {
    1500
}
pub(super) fn default_intra_frame_gap() -> f64 {
    0.000_12
}

/// Stand-in for a captured videoconference: fixed frame rate, exponentially
/// distributed frame sizes, each frame fragmented at the MTU.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthVcParams {
    pub mean_bps: f64,
    pub fps: f64,
    pub mtu_bytes: u32,
    pub intra_frame_gap_s: f64,
}

impl Default for SynthVcParams {
    fn default() -> Self {
        SynthVcParams {
            mean_bps: default_mean_bps(),
            fps: default_fps(),
            mtu_bytes: default_mtu(),
            intra_frame_gap_s: default_intra_frame_gap(),
        }
    }
}

impl SynthVcParams {
    pub fn mean_frame_bytes(&self) -> f64 {
        self.mean_bps / (8.0 * self.fps)
    }

    pub(super) fn check(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if !(self.mean_bps > 0.0 && self.mean_bps.is_finite()) {
            out.push(("mean_bps", "must be positive".to_string()));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            out.push(("fps", "must be positive".to_string()));
        }
        if self.mtu_bytes < 200 {
            out.push(("mtu_bytes", format!("must be at least 200, got {}", self.mtu_bytes)));
        }
        if !(self.intra_frame_gap_s >= 0.0) {
            out.push(("intra_frame_gap_s", "must be non-negative".to_string()));
        }
        out
    }
}

/// Inverse-CDF draw from an exponential with the given mean, truncated to `[0, cap * mean]`.
fn truncated_exponential(rng: &mut impl Rng, mean: f64, cap: f64) -> f64 {
    let u: f64 = rng.gen();
    let mass = -(-cap).exp_m1(); // 1 - e^-cap
    -mean * (-u * mass).ln_1p()
}

pub fn synth_vc_stream(
    flow: FlowId,
    p: &SynthVcParams,
    start: SimTime,
    until: SimTime,
    seed: u64,
) -> Result<Vec<Packet>, TrafficError> {
    if start >= until {
        return Err(TrafficError::EmptyInterval { start, until });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = p.mean_frame_bytes();
    let gap = SimTime::from_secs_f64(p.intra_frame_gap_s);
    let mtu = p.mtu_bytes;

    let mut out: Vec<Packet> = Vec::new();
    for frame in 0u64.. {
        let frame_at = start + SimTime::from_secs_f64(frame as f64 / p.fps);
        if frame_at >= until {
            break;
        }
        let size = (truncated_exponential(&mut rng, mean, FRAME_SIZE_CAP).round() as u64).max(1);
        let full = size / mtu as u64;
        let rem = (size % mtu as u64) as u32;
        let sizes = std::iter::repeat_n(mtu, full as usize).chain((rem > 0).then_some(rem));
        // A huge frame may spill past the next frame's slot; keep the stream ordered.
        let mut t = match out.last() {
            Some(last) => frame_at.max(last.created_at + gap),
            None => frame_at,
        };
        for size_bytes in sizes {
            if t >= until {
                break;
            }
            out.push(Packet { flow_id: flow, seq: out.len() as u64, size_bytes, created_at: t });
            t += gap;
        }
    }
    Ok(out)
}
