use rayon::prelude::*;
use serde::Serialize;

use super::{run_iteration_with, seed, EngineError, EngineOptions, IterationResult};
use crate::metrics::mean_and_std;
use crate::scenario::{FlowId, RunConfig, Scenario};
use crate::traffic::FlowKind;

/// Environment variable capping iteration parallelism (0 or unset = all cores).
pub const THREADS_ENV: &str = "BURSTGATE_THREADS";

pub fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0)
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// 1 runs on the calling thread; 0 uses every core.
    pub threads: usize,
    pub engine: EngineOptions,
}

pub fn run_many(s: &Scenario, cfg: &RunConfig) -> Result<Vec<IterationResult>, EngineError> {
    run_many_with(s, cfg, &RunOptions::default())
}

/// Runs `cfg.iterations` independent iterations; iteration `i` uses
/// `seed::iteration_seed(cfg.master_seed, i)`. Output is ordered by `i` and
/// does not depend on the thread count.
pub fn run_many_with(s: &Scenario, cfg: &RunConfig, opts: &RunOptions) -> Result<Vec<IterationResult>, EngineError> {
    if cfg.iterations == 0 {
        return Err(EngineError::Config("iterations must be at least 1".into()));
    }
    let one = |i: usize| {
        run_iteration_with(s, seed::iteration_seed(cfg.master_seed, i as u64), &opts.engine)
            .map_err(|e| EngineError::Iteration { index: i, source: Box::new(e) })
    };
    if opts.threads == 1 {
        return (0..cfg.iterations).map(one).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| EngineError::Config(e.to_string()))?;
    // collect() on an indexed parallel iterator keeps index order and reports
    // the lowest failing index.
    pool.install(|| (0..cfg.iterations).into_par_iter().map(one).collect())
}

/// Which scenario field a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    /// Buffer limit, in the scenario's buffer unit.
    BufferLimit,
    CapacityBps,
}

impl SweepParam {
    pub fn apply(self, base: &Scenario, value: f64) -> Scenario {
        let mut s = base.clone();
        let v = if value.is_finite() && value > 0.0 { value.round() as u64 } else { 0 };
        match self {
            SweepParam::BufferLimit => s.buffer.limit = v,
            SweepParam::CapacityBps => s.link.capacity_bps = v,
        }
        s
    }
}

/// Mean and sample standard deviation of a loss rate across iterations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LossSummary {
    /// `None` for the aggregate over all flows.
    pub flow_id: Option<FlowId>,
    pub kind: Option<&'static str>,
    pub mean_loss_rate: f64,
    pub std_loss_rate: f64,
}

impl LossSummary {
    pub fn of_flow(results: &[IterationResult], id: FlowId, kind: FlowKind) -> Self {
        let rates: Vec<f64> = results.iter().filter_map(|r| r.flow(id)).map(|f| f.stats.loss_rate()).collect();
        let (mean, std) = mean_and_std(&rates);
        LossSummary { flow_id: Some(id), kind: Some(kind.as_str()), mean_loss_rate: mean, std_loss_rate: std }
    }

    pub fn of_aggregate(results: &[IterationResult]) -> Self {
        let rates: Vec<f64> = results.iter().map(|r| r.aggregate.loss_rate()).collect();
        let (mean, std) = mean_and_std(&rates);
        LossSummary { flow_id: None, kind: None, mean_loss_rate: mean, std_loss_rate: std }
    }

    pub fn summarize(s: &Scenario, results: &[IterationResult]) -> (Vec<LossSummary>, LossSummary) {
        let flows = s
            .flows
            .iter()
            .enumerate()
            .map(|(i, f)| LossSummary::of_flow(results, FlowId(i as u32), f.kind()))
            .collect();
        (flows, LossSummary::of_aggregate(results))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub flows: Vec<LossSummary>,
    pub aggregate: LossSummary,
    pub mean_measured_utilization: f64,
}

/// Runs `run_many` once per value of the swept parameter.
pub fn sweep(
    base: &Scenario,
    param: SweepParam,
    values: &[f64],
    cfg: &RunConfig,
    opts: &RunOptions,
) -> Result<Vec<SweepPoint>, EngineError> {
    if values.is_empty() {
        return Err(EngineError::Config("sweep needs at least one value".into()));
    }
    let scenarios = values
        .iter()
        .map(|&value| {
            param.apply(base, value).validate().map_err(|source| EngineError::InvalidSweepValue { value, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    values
        .iter()
        .zip(&scenarios)
        .map(|(&value, s)| {
            let results = run_many_with(s, cfg, opts)?;
            let (flows, aggregate) = LossSummary::summarize(s, &results);
            let util: Vec<f64> = results.iter().map(|r| r.measured_utilization).collect();
            Ok(SweepPoint { value, flows, aggregate, mean_measured_utilization: mean_and_std(&util).0 })
        })
        .collect()
}
