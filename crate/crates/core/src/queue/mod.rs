//! The bottleneck: a drop-tail FIFO feeding a link that serializes one
//! packet at a time, plus closed-form sizing and fill-rate helpers.

mod sizing;

use std::collections::VecDeque;

use thiserror::Error;

use crate::scenario::{BufferCapacity, BufferMode, Packet};
use crate::time::SimTime;

pub use sizing::{
    bdp_size_bytes, burst_completions, burst_overflow_drops, fill_rate_bps, small_buffer_size_bytes,
    time_to_overflow_s, tiny_buffer_size_packets, FillModel, OverflowTime, DEFAULT_TINY_BUFFER_PACKETS,
};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum QueueError {
    #[error("service completion at {now} but nothing is in service")]
    NothingInService { now: SimTime },
    #[error("service completion at {now} but the packet in service departs at {due}")]
    CompletionTimeMismatch { now: SimTime, due: SimTime },
    #[error("number of flows must be at least 1")]
    NonPositiveFlows,
    #[error("tiny buffer size {0} is outside 10..=99 packets")]
    OutOfTinyRange(u32),
    #[error("buffer invariant violated: {0}")]
    Invariant(String),
}

impl QueueError {
    /// Both completion-time errors count as an invalid completion.
    pub fn is_invalid_completion(&self) -> bool {
        matches!(self, QueueError::NothingInService { .. } | QueueError::CompletionTimeMismatch { .. })
    }
}

/// What happened to an offered packet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Disposition {
    /// Admitted. `departs_at` is set when the link was idle and the packet
    /// went straight into service.
    Accepted {
        departs_at: Option<SimTime>,
    },
    Dropped,
}

impl Disposition {
    pub fn is_dropped(self) -> bool {
        self == Disposition::Dropped
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Completion {
    pub departed: Packet,
    /// Departure time of the packet promoted into service, if any.
    pub next_departure: Option<SimTime>,
}

#[derive(Clone, Debug)]
pub struct DropTailBuffer {
    capacity: BufferCapacity,
    link_bps: u64,
    queued: VecDeque<Packet>,
    queued_bytes: u64,
    in_service: Option<(Packet, SimTime)>,
    accepted: u64,
    departed: u64,
}

impl DropTailBuffer {
    pub fn new(capacity: BufferCapacity, link_bps: u64) -> Self {
        assert!(link_bps > 0, "link capacity must be positive");
        DropTailBuffer {
            capacity,
            link_bps,
            queued: VecDeque::new(),
            queued_bytes: 0,
            in_service: None,
            accepted: 0,
            departed: 0,
        }
    }

    pub fn capacity(&self) -> BufferCapacity {
        self.capacity
    }

    pub fn queued_len(&self) -> usize {
        self.queued.len()
    }

    pub fn queued_bytes(&self) -> u64 {
        self.queued_bytes
    }

    pub fn in_service(&self) -> Option<(Packet, SimTime)> {
        self.in_service
    }

    pub fn is_idle(&self) -> bool {
        self.in_service.is_none()
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn departed(&self) -> u64 {
        self.departed
    }

    /// Packets still in the system (queued plus in service).
    pub fn occupancy(&self) -> u64 {
        self.queued.len() as u64 + u64::from(self.in_service.is_some())
    }

    /// Every packet still in the system, in-service first.
    pub fn resident(&self) -> impl Iterator<Item = &Packet> {
        self.in_service.iter().map(|(p, _)| p).chain(self.queued.iter())
    }

    pub fn service_time(&self, size_bytes: u32) -> SimTime {
        SimTime::transmission(size_bytes, self.link_bps)
    }

    fn fits(&self, pkt: &Packet) -> bool {
        match self.capacity.mode {
            BufferMode::Packets => (self.queued.len() as u64) < self.capacity.limit,
            BufferMode::Bytes => self.queued_bytes + pkt.size_bytes as u64 <= self.capacity.limit,
        }
    }

    /// Drop-tail admission. An idle link takes the packet directly.
    pub fn offer(&mut self, pkt: Packet, now: SimTime) -> Disposition {
        if self.in_service.is_none() {
            debug_assert!(self.queued.is_empty());
            let departs_at = now + self.service_time(pkt.size_bytes);
            self.in_service = Some((pkt, departs_at));
            self.accepted += 1;
            return Disposition::Accepted { departs_at: Some(departs_at) };
        }
        if !self.fits(&pkt) {
            return Disposition::Dropped;
        }
        self.queued_bytes += pkt.size_bytes as u64;
        self.queued.push_back(pkt);
        self.accepted += 1;
        Disposition::Accepted { departs_at: None }
    }

    /// Finishes the in-service packet at `now` and promotes the queue head.
    pub fn service_completion(&mut self, now: SimTime) -> Result<Completion, QueueError> {
        let (departed, due) = self.in_service.ok_or(QueueError::NothingInService { now })?;
        if due != now {
            return Err(QueueError::CompletionTimeMismatch { now, due });
        }
        self.departed += 1;
        self.in_service = None;
        let next_departure = self.queued.pop_front().map(|next| {
            self.queued_bytes -= next.size_bytes as u64;
            let at = now + self.service_time(next.size_bytes);
            self.in_service = Some((next, at));
            at
        });
        Ok(Completion { departed, next_departure })
    }

    /// Capacity and conservation checks, for instrumented runs.
    pub fn check_invariants(&self) -> Result<(), QueueError> {
        let over = match self.capacity.mode {
            BufferMode::Packets => self.queued.len() as u64 > self.capacity.limit,
            BufferMode::Bytes => self.queued_bytes > self.capacity.limit,
        };
        if over {
            return Err(QueueError::Invariant(format!(
                "capacity {:?} exceeded: {} packets / {} bytes queued",
                self.capacity,
                self.queued.len(),
                self.queued_bytes
            )));
        }
        let bytes: u64 = self.queued.iter().map(|p| p.size_bytes as u64).sum();
        if bytes != self.queued_bytes {
            return Err(QueueError::Invariant(format!(
                "byte count drift: tracked {} actual {bytes}",
                self.queued_bytes
            )));
        }
        if self.accepted != self.departed + self.occupancy() {
            return Err(QueueError::Invariant(format!(
                "conservation: accepted {} != departed {} + in system {}",
                self.accepted,
                self.departed,
                self.occupancy()
            )));
        }
        Ok(())
    }
}
