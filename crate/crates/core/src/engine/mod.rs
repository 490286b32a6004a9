//! Discrete-event loop for one seeded run, and the multi-run harness.

mod event;
mod runner;
pub mod seed;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::queue::{Disposition, DropTailBuffer, QueueError};
use crate::scenario::{FlowId, Packet, PacketId, Scenario, ValidationError};
use crate::time::SimTime;
use crate::traffic::{FlowKind, TrafficError};

pub use event::{Event, EventKind};
pub use runner::{
    run_many, run_many_with, sweep, threads_from_env, LossSummary, RunOptions, SweepParam, SweepPoint, THREADS_ENV,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("flow {flow}: {source}")]
    Traffic {
        flow: FlowId,
        #[source]
        source: TrafficError,
    },
    #[error("invariant violated at t={time}: {message}")]
    Invariant { time: SimTime, message: String },
    #[error("iteration {index}: {source}")]
    Iteration {
        index: usize,
        #[source]
        source: Box<EngineError>,
    },
    #[error("sweep value {value}: {source}")]
    InvalidSweepValue {
        value: f64,
        #[source]
        source: ValidationError,
    },
    #[error("run configuration: {0}")]
    Config(String),
}

impl EngineError {
    pub fn is_invariant_violation(&self) -> bool {
        match self {
            EngineError::Invariant { .. } => true,
            EngineError::Iteration { source, .. } => source.is_invariant_violation(),
            _ => false,
        }
    }
}

impl From<QueueError> for EngineError {
    fn from(e: QueueError) -> Self {
        EngineError::Invariant { time: SimTime::ZERO, message: e.to_string() }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EngineOptions {
    /// Check buffer invariants and event ordering after every event.
    pub instrumented: bool,
    /// Packets created before this time still compete for the buffer but
    /// are left out of the counters.
    pub warmup_s: f64,
    /// Keep the identity of every dropped packet.
    pub record_drops: bool,
}

/// Per-flow (or aggregate) counters for one run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowStats {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    /// Still queued or in service when the run ended.
    pub residual: u64,
    pub bytes_sent: u64,
    pub bytes_delivered: u64,
    pub bytes_dropped: u64,
    /// Sum of (departure - arrival) over delivered packets.
    pub total_queue_delay_ns: u64,
}

impl FlowStats {
    pub fn loss_rate(&self) -> f64 {
        if self.sent == 0 {
            0.0
        } else {
            self.dropped as f64 / self.sent as f64
        }
    }

    pub fn mean_queue_delay_s(&self) -> f64 {
        if self.delivered == 0 {
            0.0
        } else {
            self.total_queue_delay_ns as f64 / self.delivered as f64 / 1e9
        }
    }

    pub fn is_conserved(&self) -> bool {
        self.sent == self.delivered + self.dropped + self.residual
    }

    fn add(&mut self, other: &FlowStats) {
        self.sent += other.sent;
        self.delivered += other.delivered;
        self.dropped += other.dropped;
        self.residual += other.residual;
        self.bytes_sent += other.bytes_sent;
        self.bytes_delivered += other.bytes_delivered;
        self.bytes_dropped += other.bytes_dropped;
        self.total_queue_delay_ns += other.total_queue_delay_ns;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub flow_id: FlowId,
    #[serde(with = "kind_str")]
    pub kind: FlowKind,
    pub start_offset_s: f64,
    pub stats: FlowStats,
}

mod kind_str {
    use crate::traffic::FlowKind;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(k: &FlowKind, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(k.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<FlowKind, D::Error> {
        let s = String::deserialize(d)?;
        [FlowKind::Voip, FlowKind::Camera, FlowKind::Trace, FlowKind::SynthVc]
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown flow kind {s}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationResult {
    pub seed: u64,
    /// Indexed by flow id.
    pub per_flow: Vec<FlowRecord>,
    pub aggregate: FlowStats,
    /// Offered rate of each flow over its own active period, summed and
    /// divided by link capacity.
    pub measured_utilization: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub drops: Vec<PacketId>,
}

impl IterationResult {
    pub fn flow(&self, id: FlowId) -> Option<&FlowRecord> {
        self.per_flow.get(id.0 as usize)
    }

    pub fn flows_of(&self, kind: FlowKind) -> impl Iterator<Item = &FlowRecord> {
        self.per_flow.iter().filter(move |f| f.kind == kind)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("result serializes")
    }
}

/// Start offset of every flow for a given iteration seed.
pub fn start_offsets(s: &Scenario, iteration_seed: u64) -> Vec<SimTime> {
    let window = s.start_window().as_nanos();
    (0..s.flows.len())
        .map(|i| {
            let fs = seed::flow_seed(iteration_seed, i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed::mix64(fs, seed::OFFSET_STREAM));
            SimTime::from_nanos(rng.gen_range(0..=window))
        })
        .collect()
}

/// One seeded run of the scenario with default options.
pub fn run_iteration(s: &Scenario, iteration_seed: u64) -> Result<IterationResult, EngineError> {
    run_iteration_with(s, iteration_seed, &EngineOptions::default())
}

pub fn run_iteration_with(
    s: &Scenario,
    iteration_seed: u64,
    opts: &EngineOptions,
) -> Result<IterationResult, EngineError> {
    let duration = s.duration();
    let offsets = start_offsets(s, iteration_seed);
    let streams = s
        .flows
        .iter()
        .zip(&offsets)
        .enumerate()
        .map(|(i, (flow, &start))| {
            let id = FlowId(i as u32);
            let stream_seed = seed::mix64(seed::flow_seed(iteration_seed, i as u64), seed::PACKET_STREAM);
            flow.generate(id, start, duration, stream_seed).map_err(|source| EngineError::Traffic { flow: id, source })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let warmup = SimTime::from_secs_f64(opts.warmup_s);
    let mut sim = Simulation::new(s, opts, warmup);
    sim.run(&streams, duration)?;

    let mut per_flow = Vec::with_capacity(s.flows.len());
    let mut aggregate = FlowStats::default();
    let mut offered = 0.0;
    for (i, stats) in sim.stats.into_iter().enumerate() {
        aggregate.add(&stats);
        let active = (duration - offsets[i]).as_secs_f64();
        offered += stats.bytes_sent as f64 * 8.0 / active;
        per_flow.push(FlowRecord {
            flow_id: FlowId(i as u32),
            kind: s.flows[i].kind(),
            start_offset_s: offsets[i].as_secs_f64(),
            stats,
        });
    }
    Ok(IterationResult {
        seed: iteration_seed,
        per_flow,
        aggregate,
        measured_utilization: offered / s.link.capacity_bps as f64,
        drops: sim.drops,
    })
}

struct Simulation<'a> {
    opts: &'a EngineOptions,
    warmup: SimTime,
    buffer: DropTailBuffer,
    stats: Vec<FlowStats>,
    drops: Vec<PacketId>,
}

impl<'a> Simulation<'a> {
    fn new(s: &Scenario, opts: &'a EngineOptions, warmup: SimTime) -> Self {
        Simulation {
            opts,
            warmup,
            buffer: DropTailBuffer::new(s.buffer, s.link.capacity_bps),
            stats: vec![FlowStats::default(); s.flows.len()],
            drops: Vec::new(),
        }
    }

    fn counted(&self, p: &Packet) -> bool {
        p.created_at >= self.warmup
    }

    fn run(&mut self, streams: &[Vec<Packet>], end: SimTime) -> Result<(), EngineError> {
        let mut cursors = vec![0usize; streams.len()];
        let mut events = BinaryHeap::new();
        for stream in streams {
            if let Some(&p) = stream.first() {
                events.push(Reverse(Event::arrival(p)));
            }
        }
        let mut last: Option<Event> = None;

        while let Some(Reverse(ev)) = events.pop() {
            if ev.time > end {
                break;
            }
            if self.opts.instrumented {
                if let Some(prev) = last {
                    if prev >= ev {
                        return Err(EngineError::Invariant {
                            time: ev.time,
                            message: format!("event order not strict: {prev:?} then {ev:?}"),
                        });
                    }
                }
                last = Some(ev);
            }
            match ev.kind {
                EventKind::Arrival(p) => {
                    let flow = p.flow_id.0 as usize;
                    cursors[flow] += 1;
                    if let Some(&next) = streams[flow].get(cursors[flow]) {
                        events.push(Reverse(Event::arrival(next)));
                    }
                    self.arrive(p, &mut events);
                }
                EventKind::ServiceCompletion { .. } => {
                    let done = self
                        .buffer
                        .service_completion(ev.time)
                        .map_err(|e| EngineError::Invariant { time: ev.time, message: e.to_string() })?;
                    let p = done.departed;
                    if self.counted(&p) {
                        let st = &mut self.stats[p.flow_id.0 as usize];
                        st.delivered += 1;
                        st.bytes_delivered += p.size_bytes as u64;
                        st.total_queue_delay_ns += (ev.time - p.created_at).as_nanos();
                    }
                    if let (Some(at), Some((next, _))) = (done.next_departure, self.buffer.in_service()) {
                        events.push(Reverse(Event::completion(at, &next)));
                    }
                }
            }
            if self.opts.instrumented {
                self.buffer
                    .check_invariants()
                    .map_err(|e| EngineError::Invariant { time: ev.time, message: e.to_string() })?;
            }
        }

        for p in self.buffer.resident() {
            if p.created_at >= self.warmup {
                self.stats[p.flow_id.0 as usize].residual += 1;
            }
        }
        if self.opts.instrumented {
            for (i, st) in self.stats.iter().enumerate() {
                if !st.is_conserved() {
                    return Err(EngineError::Invariant {
                        time: end,
                        message: format!("flow {i} not conserved: {st:?}"),
                    });
                }
            }
        }
        Ok(())
    }

    fn arrive(&mut self, p: Packet, events: &mut BinaryHeap<Reverse<Event>>) {
        let counted = self.counted(&p);
        if counted {
            let st = &mut self.stats[p.flow_id.0 as usize];
            st.sent += 1;
            st.bytes_sent += p.size_bytes as u64;
        }
        match self.buffer.offer(p, p.created_at) {
            Disposition::Dropped => {
                if counted {
                    let st = &mut self.stats[p.flow_id.0 as usize];
                    st.dropped += 1;
                    st.bytes_dropped += p.size_bytes as u64;
                }
                if self.opts.record_drops {
                    self.drops.push(p.id());
                }
            }
            Disposition::Accepted { departs_at: Some(at) } => {
                events.push(Reverse(Event::completion(at, &p)));
            }
            Disposition::Accepted { departs_at: None } => {}
        }
    }
}
