use super::QueueError;
use crate::time::SimTime;

pub const DEFAULT_TINY_BUFFER_PACKETS: u32 = 30;

// Absorbs decimal-to-binary error so that e.g. 3.5e6 * 0.3 / 8 floors to 131250.
const FLOOR_SLACK: f64 = 1e-12;

fn floor_bytes(x: f64) -> u64 {
    (x * (1.0 + FLOOR_SLACK)).floor() as u64
}

/// Bandwidth-delay product `C * RTT`, in whole bytes.
pub fn bdp_size_bytes(capacity_bps: f64, rtt_s: f64) -> u64 {
    floor_bytes(capacity_bps * rtt_s / 8.0)
}

/// BDP divided by the square root of the number of long-lived flows.
pub fn small_buffer_size_bytes(capacity_bps: f64, rtt_s: f64, n_flows: u32) -> Result<u64, QueueError> {
    if n_flows == 0 {
        return Err(QueueError::NonPositiveFlows);
    }
    let bdp = bdp_size_bytes(capacity_bps, rtt_s);
    if n_flows == 1 {
        return Ok(bdp);
    }
    Ok(floor_bytes(bdp as f64 / (n_flows as f64).sqrt()))
}

/// A "some tens of packets" buffer: the preference if in `10..=99`, else 30.
pub fn tiny_buffer_size_packets(preferred: Option<u32>) -> Result<u32, QueueError> {
    match preferred {
        None => Ok(DEFAULT_TINY_BUFFER_PACKETS),
        Some(p) if (10..=99).contains(&p) => Ok(p),
        Some(p) => Err(QueueError::OutOfTinyRange(p)),
    }
}

/// Rate at which the buffer fills; zero when output keeps up with input.
pub fn fill_rate_bps(r_in_bps: f64, r_out_bps: f64) -> f64 {
    (r_in_bps - r_out_bps).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OverflowTime {
    After(f64),
    Never,
}

impl OverflowTime {
    pub fn seconds(self) -> Option<f64> {
        match self {
            OverflowTime::After(s) => Some(s),
            OverflowTime::Never => None,
        }
    }
}

pub fn time_to_overflow_s(free_bits: f64, fill_rate_bps: f64) -> OverflowTime {
    if fill_rate_bps > 0.0 {
        OverflowTime::After(free_bits.max(0.0) / fill_rate_bps)
    } else {
        OverflowTime::Never
    }
}

/// Input/output rates and remaining headroom of a buffer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FillModel {
    pub r_in: f64,
    pub r_out: f64,
    pub free_bits: f64,
}

impl FillModel {
    pub fn new(r_in: f64, r_out: f64, free_bits: f64) -> Self {
        assert!(r_in >= 0.0 && r_out >= 0.0 && free_bits >= 0.0, "fill model fields must be >= 0");
        FillModel { r_in, r_out, free_bits }
    }

    pub fn fill_rate(&self) -> f64 {
        fill_rate_bps(self.r_in, self.r_out)
    }

    pub fn time_to_overflow(&self) -> OverflowTime {
        time_to_overflow_s(self.free_bits, self.fill_rate())
    }
}

/// Service completions that happen by the time the last packet of a
/// back-to-back burst arrives, for a link that starts idle and stays busy.
/// Only meaningful when `gap < service`.
pub fn burst_completions(burst_packets: u64, gap: SimTime, service: SimTime) -> u64 {
    if burst_packets == 0 {
        return 0;
    }
    (burst_packets - 1) * gap.as_nanos() / service.as_nanos().max(1)
}

/// Packets lost when a burst of `burst_packets` equal-size packets, spaced
/// `gap` apart, hits an empty packet-mode buffer of `limit`:
/// `max(0, P - K - 1 - D)` with `D` from [`burst_completions`]. Returns
/// `None` when `gap >= service`, where the link can keep up and the law does
/// not apply.
pub fn burst_overflow_drops(limit: u64, burst_packets: u64, gap: SimTime, service: SimTime) -> Option<u64> {
    if burst_packets > 1 && gap >= service {
        return None;
    }
    let completions = burst_completions(burst_packets, gap, service);
    Some(burst_packets.saturating_sub(limit + 1 + completions))
}
