//! Loss statistics, VoIP call scoring and the tables built from them.

mod emodel;
mod histogram;
pub mod tables;

use serde::Serialize;
use thiserror::Error;

use crate::engine::IterationResult;
use crate::scenario::FlowId;
use crate::traffic::FlowKind;

pub use emodel::{id_delay, ie_eff, mos_from_r, quality_band, r_factor, EModelParams, QualityBand};
pub use histogram::{default_loss_edges, default_mos_edges, histogram, loss_edges_covering, uniform_edges, Histogram};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum MetricsError {
    #[error("results contain no VoIP flows")]
    NoVoipFlows,
    #[error("histogram edges must be finite, strictly increasing, and at least two")]
    BadEdges,
    #[error("no results to score")]
    NoResults,
    #[error("delay sweep must contain at least one value")]
    EmptyDelaySweep,
}

/// Sample mean and sample (n - 1) standard deviation. Empty input gives zeros.
pub fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// E-model score of one VoIP call in one iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CallScore {
    pub iteration: usize,
    pub flow_id: FlowId,
    pub loss_rate: f64,
    pub one_way_delay_ms: f64,
    pub r: f64,
    pub mos: f64,
}

impl CallScore {
    pub fn band(&self) -> QualityBand {
        quality_band(self.mos)
    }
}

/// Scores every VoIP call of every iteration. The one-way delay is the
/// external network delay plus the call's mean queueing delay plus the
/// codec allowance.
pub fn voip_mos_per_iteration(
    results: &[IterationResult],
    delay_ms: f64,
    p: &EModelParams,
) -> Result<Vec<Vec<CallScore>>, MetricsError> {
    let scores: Vec<Vec<CallScore>> = results
        .iter()
        .enumerate()
        .map(|(iteration, r)| {
            r.flows_of(FlowKind::Voip)
                .map(|f| {
                    let loss_rate = f.stats.loss_rate();
                    let one_way_delay_ms = delay_ms + 1000.0 * f.stats.mean_queue_delay_s() + p.codec_delay_ms;
                    let r = r_factor(100.0 * loss_rate, one_way_delay_ms, p);
                    CallScore { iteration, flow_id: f.flow_id, loss_rate, one_way_delay_ms, r, mos: mos_from_r(r) }
                })
                .collect()
        })
        .collect();
    if scores.iter().all(Vec::is_empty) {
        return Err(MetricsError::NoVoipFlows);
    }
    Ok(scores)
}

/// Per-call VoIP loss rates across all iterations.
pub fn voip_loss_rates(results: &[IterationResult]) -> Vec<f64> {
    results.iter().flat_map(|r| r.flows_of(FlowKind::Voip).map(|f| f.stats.loss_rate())).collect()
}

/// MOS grid used by the cumulative curves: 1.00 to 4.50 in 0.01 steps.
pub fn mos_grid() -> Vec<f64> {
    (100..=450).map(|k| k as f64 / 100.0).collect()
}

/// `P(MOS >= x)` over the MOS grid, for one network delay.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MosCurve {
    pub delay_ms: f64,
    pub points: Vec<(f64, f64)>,
}

impl MosCurve {
    pub fn probability_at_least(&self, x: f64) -> f64 {
        self.points.iter().find(|(g, _)| *g >= x - 1e-12).map_or(0.0, |(_, p)| *p)
    }
}

/// Empirical `P(MOS >= x)` at each grid point.
pub fn ccdf(mos_values: &[f64], grid: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = mos_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    grid.iter()
        .map(|&x| {
            let below = sorted.partition_point(|m| *m < x);
            (x, (sorted.len() - below) as f64 / n)
        })
        .collect()
}

pub fn mos_cdf(
    results: &[IterationResult],
    delay_sweep_ms: &[f64],
    p: &EModelParams,
) -> Result<Vec<MosCurve>, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::NoResults);
    }
    if delay_sweep_ms.is_empty() {
        return Err(MetricsError::EmptyDelaySweep);
    }
    let grid = mos_grid();
    delay_sweep_ms
        .iter()
        .map(|&delay_ms| {
            let mos: Vec<f64> =
                voip_mos_per_iteration(results, delay_ms, p)?.into_iter().flatten().map(|c| c.mos).collect();
            Ok(MosCurve { delay_ms, points: ccdf(&mos, &grid) })
        })
        .collect()
}
