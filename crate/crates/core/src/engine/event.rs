use std::cmp::Ordering;

use crate::scenario::{FlowId, Packet};
use crate::time::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    /// The link finishes serializing the identified packet.
    ServiceCompletion {
        flow_id: FlowId,
        seq: u64,
    },
    Arrival(Packet),
}

impl EventKind {
    fn rank(&self) -> u8 {
        match self {
            EventKind::ServiceCompletion { .. } => 0,
            EventKind::Arrival(_) => 1,
        }
    }

    fn ids(&self) -> (FlowId, u64) {
        match self {
            EventKind::ServiceCompletion { flow_id, seq } => (*flow_id, *seq),
            EventKind::Arrival(p) => (p.flow_id, p.seq),
        }
    }
}

/// Ordered by time, then completions before arrivals, then flow id, then
/// sequence number. No two distinct events of one run compare equal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Event {
    pub time: SimTime,
    pub kind: EventKind,
}

impl Event {
    pub fn arrival(p: Packet) -> Self {
        Event { time: p.created_at, kind: EventKind::Arrival(p) }
    }

    pub fn completion(time: SimTime, p: &Packet) -> Self {
        Event { time, kind: EventKind::ServiceCompletion { flow_id: p.flow_id, seq: p.seq } }
    }

    pub fn key(&self) -> (SimTime, u8, FlowId, u64) {
        let (f, s) = self.kind.ids();
        (self.time, self.kind.rank(), f, s)
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(flow: u32, seq: u64, t: u64) -> Packet {
        Packet { flow_id: FlowId(flow), seq, size_bytes: 100, created_at: SimTime::from_micros(t) }
    }

    #[test]
    fn ordering_rules() {
        let a = Event::arrival(p(0, 0, 10));
        let c = Event::completion(SimTime::from_micros(10), &p(5, 9, 0));
        assert!(c < a, "completion first at equal times");
        assert!(Event::arrival(p(0, 1, 10)) < Event::arrival(p(1, 0, 10)));
        assert!(Event::arrival(p(1, 0, 10)) < Event::arrival(p(1, 1, 10)));
        assert!(Event::arrival(p(9, 9, 9)) < a);
    }
}
