//! `burstgate` command-line driver.
//!
//! Exit codes: 0 on success, 1 for user or configuration errors, 2 when an
//! instrumented run detects an internal invariant violation.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::engine::{self, EngineError, EngineOptions, LossSummary, RunOptions, SweepParam};
use crate::metrics::{
    self, default_mos_edges, histogram, loss_edges_covering, mos_from_r, quality_band, r_factor, tables, EModelParams,
};
use crate::queue::{bdp_size_bytes, small_buffer_size_bytes, tiny_buffer_size_packets};
use crate::scenario::{BufferMode, RunConfig, Scenario, ScenarioError};
use crate::traffic::{FlowKind, TrafficError};

#[derive(Debug, Parser)]
#[command(name = "burstgate", version, about = "Access-router buffer and bursty traffic simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario for N seeded iterations and write result tables.
    Run(RunArgs),
    /// Repeat a scenario over a list of buffer limits or link capacities.
    Sweep(SweepArgs),
    /// Buffer size from the BDP, small-buffer or tiny-buffer rule.
    Sizing(SizingArgs),
    /// Score a loss/delay pair with the E-model.
    Mos(MosArgs),
    /// Print the camera packets-per-burst table as CSV.
    Table1(Table1Args),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 40)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Network delays (ms) for the cumulative MOS curves.
    #[arg(long, value_delimiter = ',', default_values_t = crate::scenario::default_delay_sweep())]
    pub delays: Vec<f64>,
    #[command(flatten)]
    pub exec: ExecArgs,
    #[command(flatten)]
    pub emodel: EModelArgs,
}

#[derive(Debug, Args)]
pub struct ExecArgs {
    /// Worker threads (0 = all cores). Defaults to BURSTGATE_THREADS.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Check buffer and event-order invariants after every event.
    #[arg(long)]
    pub instrumented: bool,
    /// Exclude packets created before this time from the counters.
    #[arg(long, default_value_t = 0.0)]
    pub warmup_s: f64,
}

impl ExecArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            threads: self.threads.unwrap_or_else(engine::threads_from_env),
            engine: EngineOptions { instrumented: self.instrumented, warmup_s: self.warmup_s, record_drops: false },
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SweepWhat {
    Buffer,
    Capacity,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, value_enum)]
    pub param: SweepWhat,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    #[arg(long, default_value_t = 40)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub exec: ExecArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Rule {
    Bdp,
    Small,
    Tiny,
}

#[derive(Debug, Args)]
pub struct SizingArgs {
    #[arg(long, value_enum)]
    pub rule: Rule,
    #[arg(long)]
    pub capacity_bps: Option<f64>,
    #[arg(long)]
    pub rtt_s: Option<f64>,
    #[arg(long)]
    pub flows: Option<u32>,
    /// Preferred tiny-buffer size in packets.
    #[arg(long)]
    pub packets: Option<u32>,
}

#[derive(Debug, Args)]
pub struct EModelArgs {
    #[arg(long)]
    pub r0: Option<f64>,
    #[arg(long)]
    pub ie: Option<f64>,
    #[arg(long)]
    pub bpl: Option<f64>,
    #[arg(long = "is")]
    pub is_impairment: Option<f64>,
    #[arg(long)]
    pub advantage: Option<f64>,
    #[arg(long)]
    pub codec_delay_ms: Option<f64>,
}

impl EModelArgs {
    fn params(&self) -> Result<EModelParams, CliError> {
        let d = EModelParams::default();
        let p = EModelParams {
            r0: self.r0.unwrap_or(d.r0),
            ie: self.ie.unwrap_or(d.ie),
            bpl: self.bpl.unwrap_or(d.bpl),
            is_impairment: self.is_impairment.unwrap_or(d.is_impairment),
            advantage: self.advantage.unwrap_or(d.advantage),
            codec_delay_ms: self.codec_delay_ms.unwrap_or(d.codec_delay_ms),
        };
        p.check().map_err(|m| CliError::new(Stage::Validate, m))?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct MosArgs {
    #[arg(long)]
    pub loss_percent: f64,
    #[arg(long, default_value_t = 0.0)]
    pub delay_ms: f64,
    #[command(flatten)]
    pub emodel: EModelArgs,
}

#[derive(Debug, Args)]
pub struct Table1Args {
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Parse,
    Validate,
    Io,
    Run,
    Invariant,
}

impl Stage {
    fn name(self) -> &'static str {
        match self {
            Stage::Parse => "parse",
            Stage::Validate => "validate",
            Stage::Io => "io",
            Stage::Run => "run",
            Stage::Invariant => "invariant",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub stage: Stage,
    pub message: String,
}

impl CliError {
    fn new(stage: Stage, message: impl Into<String>) -> Self {
        CliError { stage, message: message.into() }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::new(Stage::Io, format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        if self.stage == Stage::Invariant {
            2
        } else {
            1
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "error [{}]: {}", self.stage.name(), self.message)
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        let stage = match &e {
            ScenarioError::Io { .. } => Stage::Io,
            ScenarioError::Parse { .. } => Stage::Parse,
            ScenarioError::Invalid(_) => Stage::Validate,
            ScenarioError::Traffic(TrafficError::Io { .. }) => Stage::Io,
            ScenarioError::Traffic(_) => Stage::Parse,
        };
        CliError::new(stage, e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        let stage = if e.is_invariant_violation() {
            Stage::Invariant
        } else if matches!(e, EngineError::InvalidSweepValue { .. }) {
            Stage::Validate
        } else {
            Stage::Run
        };
        CliError::new(stage, e.to_string())
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: &Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Run(a) => cmd_run(a, stdout),
        Command::Sweep(a) => cmd_sweep(a, stdout),
        Command::Sizing(a) => cmd_sizing(a, stdout),
        Command::Mos(a) => cmd_mos(a, stdout),
        Command::Table1(a) => cmd_table1(a, stdout),
    }
}

fn run_config(iterations: usize, seed: u64, delays: Vec<f64>) -> Result<RunConfig, CliError> {
    RunConfig { iterations, master_seed: seed, mos_delay_sweep_ms: delays }
        .validate()
        .map_err(|e| CliError::new(Stage::Validate, e.to_string()))
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    Ok((path, BufWriter::new(f)))
}

fn write_table(
    dir: &Path,
    name: &str,
    f: impl FnOnce(&mut BufWriter<File>) -> csv::Result<()>,
) -> Result<(), CliError> {
    let (path, mut w) = create(dir, name)?;
    f(&mut w).map_err(|e| CliError::io(&path, e))?;
    w.flush().map_err(|e| CliError::io(&path, e))
}

fn cmd_run(a: &RunArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let scenario = Scenario::load(&a.scenario)?;
    let cfg = run_config(a.iterations, a.seed, a.delays.clone())?;
    let params = a.emodel.params()?;
    let results = engine::run_many_with(&scenario, &cfg, &a.exec.options())?;
    fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;

    write_table(&a.out, "per_iteration.csv", |w| tables::write_per_iteration(w, &results))?;

    let agg_loss: Vec<f64> = results.iter().map(|r| r.aggregate.loss_rate()).collect();
    let max_loss = agg_loss.iter().copied().fold(0.0, f64::max);
    let loss_hist = histogram(&agg_loss, &loss_edges_covering(max_loss)).expect("edges are valid");
    write_table(&a.out, "loss_histogram.csv", |w| tables::write_histogram(w, &loss_hist))?;

    let has_voip = scenario.flows.iter().any(|f| f.kind() == FlowKind::Voip);
    let mut voip_summary = None;
    if has_voip {
        let first_delay = cfg.mos_delay_sweep_ms.first().copied().unwrap_or(0.0);
        let calls: Vec<_> = metrics::voip_mos_per_iteration(&results, first_delay, &params)
            .map_err(|e| CliError::new(Stage::Run, e.to_string()))?
            .into_iter()
            .flatten()
            .collect();
        let mos: Vec<f64> = calls.iter().map(|c| c.mos).collect();
        let mos_hist = histogram(&mos, &default_mos_edges()).expect("default edges are valid");
        write_table(&a.out, "mos_histogram.csv", |w| tables::write_histogram(w, &mos_hist))?;
        let curves = metrics::mos_cdf(&results, &cfg.mos_delay_sweep_ms, &params)
            .map_err(|e| CliError::new(Stage::Run, e.to_string()))?;
        write_table(&a.out, "mos_cdf.csv", |w| tables::write_cdf(w, &curves))?;
        voip_summary = Some((first_delay, mos, curves));
    }

    let summary = render_summary(a, &scenario, &cfg, &results, &loss_hist, voip_summary.as_ref());
    let (path, mut w) = create(&a.out, "summary.txt")?;
    w.write_all(summary.as_bytes()).map_err(|e| CliError::io(&path, e))?;
    w.flush().map_err(|e| CliError::io(&path, e))?;
    stdout.write_all(summary.as_bytes()).map_err(|e| CliError::new(Stage::Io, e.to_string()))?;
    Ok(())
}

fn render_summary(
    a: &RunArgs,
    s: &Scenario,
    cfg: &RunConfig,
    results: &[engine::IterationResult],
    loss_hist: &metrics::Histogram,
    voip: Option<&(f64, Vec<f64>, Vec<metrics::MosCurve>)>,
) -> String {
    let mut out = String::new();
    let unit = match s.buffer.mode {
        BufferMode::Packets => "packets",
        BufferMode::Bytes => "bytes",
    };
    let nominal = s.utilization().unwrap_or(f64::NAN);
    let util: Vec<f64> = results.iter().map(|r| r.measured_utilization).collect();
    let (util_mean, util_std) = metrics::mean_and_std(&util);
    let _ = writeln!(out, "scenario: {}", a.scenario.display());
    let _ = writeln!(out, "iterations: {}", cfg.iterations);
    let _ = writeln!(out, "master_seed: {}", cfg.master_seed);
    let _ = writeln!(out, "link_capacity_bps: {}", s.link.capacity_bps);
    let _ = writeln!(out, "buffer: {} {unit}", s.buffer.limit);
    let _ = writeln!(out, "duration_s: {}", s.duration_s);
    let _ = writeln!(out, "nominal_utilization: {nominal:.4}");
    let _ = writeln!(out, "measured_utilization: {util_mean:.4} +- {util_std:.4}");
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<10} {:<9} {:>14} {:>14}", "flow", "kind", "mean_loss", "std_loss");
    let (flows, agg) = LossSummary::summarize(s, results);
    for f in &flows {
        let id = f.flow_id.map(|i| i.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{:<10} {:<9} {:>14.6} {:>14.6}",
            id,
            f.kind.unwrap_or(""),
            f.mean_loss_rate,
            f.std_loss_rate
        );
    }
    let _ = writeln!(
        out,
        "{:<10} {:<9} {:>14.6} {:>14.6}",
        tables::AGGREGATE_FLOW,
        "",
        agg.mean_loss_rate,
        agg.std_loss_rate
    );
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "aggregate loss histogram: {} in range, {} above {}",
        loss_hist.counts.iter().sum::<u64>(),
        loss_hist.overflow,
        loss_hist.edges.last().copied().unwrap_or(0.0)
    );
    if let Some((delay, mos, curves)) = voip {
        let (mean, std) = metrics::mean_and_std(mos);
        let min = mos.iter().copied().fold(f64::INFINITY, f64::min);
        let max = mos.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(out);
        let _ = writeln!(out, "voip calls: {}", mos.len());
        let _ =
            writeln!(out, "mos at {delay} ms network delay: mean {mean:.3} +- {std:.3}, min {min:.3}, max {max:.3}");
        for c in curves {
            let _ = writeln!(
                out,
                "delay {:>6} ms: P(MOS >= 3.60) = {:.4}, P(MOS >= 4.03) = {:.4}, P(MOS >= 4.34) = {:.4}",
                c.delay_ms,
                c.probability_at_least(3.60),
                c.probability_at_least(4.03),
                c.probability_at_least(4.34)
            );
        }
    }
    out
}

fn cmd_sweep(a: &SweepArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if a.values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(CliError::new(Stage::Parse, "sweep values must be positive numbers"));
    }
    let scenario = Scenario::load(&a.scenario)?;
    let cfg = run_config(a.iterations, a.seed, crate::scenario::default_delay_sweep())?;
    let param = match a.param {
        SweepWhat::Buffer => SweepParam::BufferLimit,
        SweepWhat::Capacity => SweepParam::CapacityBps,
    };
    let points = engine::sweep(&scenario, param, &a.values, &cfg, &a.exec.options())?;
    fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    write_table(&a.out, "sweep.csv", |w| tables::write_sweep(w, &points))?;
    for p in &points {
        writeln!(
            stdout,
            "{} {}: aggregate loss {:.6} +- {:.6} (utilization {:.4})",
            match a.param {
                SweepWhat::Buffer => "buffer",
                SweepWhat::Capacity => "capacity_bps",
            },
            p.value,
            p.aggregate.mean_loss_rate,
            p.aggregate.std_loss_rate,
            p.mean_measured_utilization
        )
        .map_err(|e| CliError::new(Stage::Io, e.to_string()))?;
    }
    Ok(())
}

fn require<T: Copy>(v: Option<T>, flag: &str, rule: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::new(Stage::Parse, format!("--{flag} is required for --rule {rule}")))
}

fn cmd_sizing(a: &SizingArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let line = match a.rule {
        Rule::Bdp | Rule::Small => {
            let rule = if matches!(a.rule, Rule::Bdp) { "bdp" } else { "small" };
            let c = require(a.capacity_bps, "capacity-bps", rule)?;
            let rtt = require(a.rtt_s, "rtt-s", rule)?;
            if !(c > 0.0) || !(rtt >= 0.0) {
                return Err(CliError::new(Stage::Validate, "--capacity-bps must be positive and --rtt-s non-negative"));
            }
            let bytes = if matches!(a.rule, Rule::Bdp) {
                bdp_size_bytes(c, rtt)
            } else {
                let n = require(a.flows, "flows", rule)?;
                small_buffer_size_bytes(c, rtt, n).map_err(|e| CliError::new(Stage::Validate, e.to_string()))?
            };
            format!("{bytes} bytes ({} packets @1500B)", bytes / 1500)
        }
        Rule::Tiny => {
            let n = tiny_buffer_size_packets(a.packets).map_err(|e| CliError::new(Stage::Validate, e.to_string()))?;
            format!("{n} packets")
        }
    };
    writeln!(stdout, "{line}").map_err(|e| CliError::new(Stage::Io, e.to_string()))
}

fn cmd_mos(a: &MosArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if !(0.0..=100.0).contains(&a.loss_percent) {
        return Err(CliError::new(Stage::Validate, "--loss-percent must be within [0, 100]"));
    }
    if !(a.delay_ms >= 0.0) || !a.delay_ms.is_finite() {
        return Err(CliError::new(Stage::Validate, "--delay-ms must be non-negative"));
    }
    let p = a.emodel.params()?;
    let r = r_factor(a.loss_percent, a.delay_ms, &p);
    let mos = mos_from_r(r);
    writeln!(stdout, "R={r:.2} MOS={mos:.2} band={}", quality_band(mos))
        .map_err(|e| CliError::new(Stage::Io, e.to_string()))
}

fn cmd_table1(a: &Table1Args, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &a.out {
        Some(path) => {
            let f = File::create(path).map_err(|e| CliError::io(path, e))?;
            tables::write_table1(BufWriter::new(f)).map_err(|e| CliError::io(path, e))
        }
        None => tables::write_table1(stdout).map_err(|e| CliError::new(Stage::Io, e.to_string())),
    }
}
