use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use reduce_sched::Rational;

#[derive(Parser, Debug)]
#[command(name = "reduce-sched", version, about = "Reduction schedules under the alpha-beta-gamma cost model")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Closed-form times, optimal segment sizes and lower bounds.
    Time(TimeArgs),
    /// Build one schedule and write it as JSON, CSV or SVG.
    Schedule(ScheduleArgs),
    /// Best standard algorithm against greedy over a range of message sizes.
    Sweep(SweepArgs),
    /// Which algorithm wins where.
    Regionmap(RegionArgs),
    /// Equal against unequal segment sizes on the m = 10 grid.
    Unequal(UnequalArgs),
    /// Greedy against exhaustive search, and the two-port round count.
    Verify(VerifyArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Uni,
    Bi,
}

impl From<Model> for reduce_sched::PortModel {
    fn from(m: Model) -> Self {
        match m {
            Model::Uni => reduce_sched::PortModel::Unidirectional,
            Model::Bi => reduce_sched::PortModel::Bidirectional,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Csv,
    Json,
    Svg,
    /// Aligned columns on stdout.
    Table,
}

#[derive(Args, Debug, Clone)]
pub struct MachineArgs {
    /// Processor count.
    #[arg(short = 'p', long = "p")]
    pub p: Option<u64>,
    /// Latency per message.
    #[arg(long)]
    pub alpha: Option<Rational>,
    /// Transfer time per element.
    #[arg(long)]
    pub beta: Option<Rational>,
    /// Combine time per element.
    #[arg(long)]
    pub gamma: Option<Rational>,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write rationals as decimals.
    #[arg(long)]
    pub float: bool,
}

#[derive(Args, Debug)]
pub struct TimeArgs {
    #[arg(long, value_enum, default_value = "uni")]
    pub model: Model,
    #[command(flatten)]
    pub machine: MachineArgs,
    /// Message size in elements.
    #[arg(short = 'm', long = "m")]
    pub m: u64,
    /// Segment size; defaults to the whole message.
    #[arg(short = 's', long = "s")]
    pub s: Option<u64>,
    /// Only this algorithm; formula domain errors then exit with status 2.
    #[arg(long)]
    pub algorithm: Option<String>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: OutFormat,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScheduleAlgorithm {
    Binomial,
    Pipeline,
    UniGreedy,
    BiGreedy,
}

#[derive(Args, Debug)]
pub struct ScheduleArgs {
    #[arg(long, value_enum)]
    pub algorithm: ScheduleAlgorithm,
    #[command(flatten)]
    pub machine: MachineArgs,
    /// Segment sizes, e.g. "5,3,2".
    #[arg(long, conflicts_with_all = ["m", "s"])]
    pub plan: Option<String>,
    /// Message size; with `-s`, cut into equal segments.
    #[arg(short = 'm', long = "m")]
    pub m: Option<u64>,
    #[arg(short = 's', long = "s")]
    pub s: Option<u64>,
    /// Write only this format; JSON and SVG otherwise.
    #[arg(long, value_enum)]
    pub format: Option<OutFormat>,
    /// Output path stem; `.json`, `.svg` or `.csv` is appended.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value = "uni")]
    pub model: Model,
    #[command(flatten)]
    pub machine: MachineArgs,
    #[arg(long, default_value_t = 1)]
    pub m_min: u64,
    #[arg(long, default_value_t = 1 << 20)]
    pub m_max: u64,
    /// Message sizes per doubling.
    #[arg(long, default_value_t = 4)]
    pub per_octave: u32,
    /// Segment sizes tried for one-port greedy; `auto` is exhaustive up to
    /// m = 1024.
    #[arg(long, value_enum, default_value = "auto")]
    pub search: SearchArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RegionMode {
    /// Best of binomial, pipeline and binary per (p, m), one port.
    StandardsUni,
    /// Whether butterfly beats two-port greedy for some m, per (p, beta/gamma).
    ButterflyBi,
}

#[derive(Args, Debug)]
pub struct RegionArgs {
    #[arg(long, value_enum, default_value = "standards-uni")]
    pub mode: RegionMode,
    #[command(flatten)]
    pub machine: MachineArgs,
    /// Processor counts, e.g. "4,8,1000"; defaults to powers of two.
    #[arg(long)]
    pub p_list: Option<String>,
    #[arg(long, default_value_t = 1 << 20)]
    pub m_max: u64,
    /// Step of the beta/gamma axis.
    #[arg(long, default_value = "1/4")]
    pub ratio_step: Rational,
    #[arg(long, default_value = "10")]
    pub ratio_max: Rational,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Greedy,
    Pipeline,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    /// One equi plan per segment count.
    ByCount,
    /// One equi plan per segment size.
    BySize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SearchArg {
    Exhaustive,
    Pow2,
    Auto,
}

#[derive(Args, Debug)]
pub struct UnequalArgs {
    #[arg(long, value_enum, default_value = "greedy")]
    pub variant: VariantArg,
    #[arg(long, value_enum, default_value = "by-count")]
    pub family: FamilyArg,
    /// Restrict the grid to one processor count.
    #[arg(short = 'p', long = "p")]
    pub p: Option<u64>,
    /// Per-point CSV; the summary goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub float: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Largest p checked against exhaustive search.
    #[arg(long, default_value_t = 5)]
    pub oracle_max_p: u64,
    /// Largest segment count checked against exhaustive search.
    #[arg(long, default_value_t = 3)]
    pub oracle_max_q: usize,
    /// Largest p in the two-port round check.
    #[arg(long, default_value_t = 64)]
    pub bi_max_p: u64,
    /// Largest q in the two-port round check.
    #[arg(long, default_value_t = 10)]
    pub bi_max_q: u64,
    /// Counterexample dump (JSON); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Splices `key=value` lines from `--config FILE` into the arguments right
/// after the subcommand, so flags given on the command line win.
pub fn with_config(argv: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or("--config needs a file")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read {path}: {e}"))?;
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected key=value", n + 1))?;
        let (key, value) = (key.trim(), value.trim());
        match value {
            "true" => extra.push(format!("--{key}")),
            "false" => {}
            _ => extra.push(format!("--{key}={value}")),
        }
    }
    // Position of the subcommand: the first argument after the program name.
    let at = rest.len().min(2);
    rest.splice(at..at, extra);
    Ok(rest)
}
