//! CSV tables. Floats are written in Rust's shortest round-trip form so a
//! table read back and rewritten is byte-identical.

use std::io::Write;

use crate::engine::{IterationResult, SweepPoint};
use crate::traffic::BURST_TABLE;

use super::{Histogram, MosCurve};

pub const PER_ITERATION_HEADER: [&str; 9] =
    ["iteration", "flow_id", "kind", "sent", "delivered", "dropped", "residual", "loss_rate", "mean_queue_delay_s"];
pub const HISTOGRAM_HEADER: [&str; 3] = ["bin_low", "bin_high", "count"];
pub const CDF_HEADER: [&str; 3] = ["delay_ms", "mos", "probability"];
pub const SWEEP_HEADER: [&str; 4] = ["value", "flow_id", "mean_loss_rate", "std_loss_rate"];
pub const TABLE1_HEADER: [&str; 3] = ["resolution", "compression_kbytes", "packets_per_burst"];

/// `flow_id` written for rows that summarize all flows together.
pub const AGGREGATE_FLOW: &str = "aggregate";

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_per_iteration<W: Write>(w: W, results: &[IterationResult]) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(PER_ITERATION_HEADER)?;
    for (i, r) in results.iter().enumerate() {
        for f in &r.per_flow {
            let s = &f.stats;
            out.write_record([
                i.to_string(),
                f.flow_id.to_string(),
                f.kind.as_str().to_string(),
                s.sent.to_string(),
                s.delivered.to_string(),
                s.dropped.to_string(),
                s.residual.to_string(),
                s.loss_rate().to_string(),
                s.mean_queue_delay_s().to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_histogram<W: Write>(w: W, h: &Histogram) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(HISTOGRAM_HEADER)?;
    for (lo, hi, count) in h.bins() {
        out.write_record([lo.to_string(), hi.to_string(), count.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_cdf<W: Write>(w: W, curves: &[MosCurve]) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(CDF_HEADER)?;
    for c in curves {
        for (x, p) in &c.points {
            out.write_record([c.delay_ms.to_string(), x.to_string(), p.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// One row per (value, flow) pair, followed by an `aggregate` row per value.
pub fn write_sweep<W: Write>(w: W, points: &[SweepPoint]) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(SWEEP_HEADER)?;
    for pt in points {
        let rows = pt.flows.iter().chain(std::iter::once(&pt.aggregate));
        for s in rows {
            let id = s.flow_id.map_or_else(|| AGGREGATE_FLOW.to_string(), |f| f.to_string());
            out.write_record([pt.value.to_string(), id, s.mean_loss_rate.to_string(), s.std_loss_rate.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_table1<W: Write>(w: W) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(TABLE1_HEADER)?;
    for e in BURST_TABLE {
        out.write_record([
            e.resolution.to_string(),
            e.compression_kbytes.to_string(),
            e.packets_per_burst.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
