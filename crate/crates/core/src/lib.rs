//! Deterministic discrete-event simulation of an access-router bottleneck
//! shared by VoIP, bursty IP-camera and videoconference traffic.
//!
//! The crate is organized bottom-up:
//!
//! - [`time`] and [`scenario`]: the simulation clock and the description of
//!   one experiment (link, buffer, flows).
//! - [`traffic`]: packet stream generators for each source type.
//! - [`queue`]: the drop-tail buffer and link, plus buffer-sizing rules.
//! - [`engine`]: the event loop and the seeded multi-iteration runner.
//! - [`metrics`]: loss statistics, E-model MOS scoring and CSV tables.
//! - [`cli`]: the `burstgate` command-line driver.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod engine;
pub mod metrics;
pub mod queue;
pub mod scenario;
pub mod time;
pub mod traffic;

pub use engine::{run_iteration, run_many, sweep, FlowStats, IterationResult, SweepParam};
pub use scenario::{BufferCapacity, BufferMode, FlowId, LinkSpec, Packet, RunConfig, Scenario};
pub use time::SimTime;
pub use traffic::{FlowKind, FlowSpec, Source};
