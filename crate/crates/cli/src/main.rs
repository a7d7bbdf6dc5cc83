//! `memwall`: FLOP/MOP analysis, roofline estimates, training memory and
//! scaling-trend fits from the command line.

mod commands;
mod error;
mod inputs;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use memwall::{OptimizerKind, Precision};

use crate::error::CliError;
use crate::report::{Emit, Format};

#[derive(Debug, Parser)]
#[command(name = "memwall", version, about = "Analytical memory-wall models for Transformer workloads")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// FLOPs, memory traffic and arithmetic intensity of inference.
    Analyze(AnalyzeArgs),
    /// Roofline latency estimates on a hardware spec.
    Roofline(RooflineArgs),
    /// Exponential growth rates per two years from a trend CSV.
    Trends(TrendsArgs),
    /// Training memory footprint and activation checkpointing trade-off.
    Memory(MemoryArgs),
    /// Print the model file of a built-in preset.
    Preset {
        #[arg(value_parser = ["bert-base", "bert-large", "gpt2"])]
        name: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Encoder,
    Decoder,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, value_enum)]
    pub emit: Option<Emit>,
}

#[derive(Debug, Clone, Args)]
pub struct WorkloadArgs {
    /// Run every model as an encoder pass or as autoregressive generation;
    /// defaults to each model's own architecture class.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Sequence lengths, comma separated; one row per value in this order.
    #[arg(long, value_delimiter = ',', default_value = "128")]
    pub seq: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    pub batch: u64,
    #[arg(long, value_parser = parse_precision, default_value = "int8")]
    pub precision: Precision,
    /// Count softmax, layer-norm, GELU and residual kernels.
    #[arg(long)]
    pub elementwise: bool,
    /// Count embedding lookups (and the LM head when decoding).
    #[arg(long)]
    pub embeddings: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Model file paths or preset names.
    #[arg(required = true)]
    pub models: Vec<String>,
    #[command(flatten)]
    pub workload: WorkloadArgs,
    /// One row per kernel instead of per sequence length.
    #[arg(long)]
    pub per_layer: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RooflineArgs {
    /// Model file paths or preset names; the first is the latency baseline.
    #[arg(required = true)]
    pub models: Vec<String>,
    /// Hardware JSON/CSV file, or the name of a bundled device.
    #[arg(long)]
    pub hardware: String,
    /// Row to select from a multi-row hardware CSV.
    #[arg(long)]
    pub device: Option<String>,
    #[command(flatten)]
    pub workload: WorkloadArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TrendsArgs {
    /// Trend CSV (`metric,year,value[,tag]`); the bundled dataset when omitted.
    pub csv: Option<String>,
    /// Metric to fit, or `all`.
    #[arg(long, default_value = "all")]
    pub metric: String,
    #[arg(long)]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    /// Drop rows carrying this tag (repeatable), e.g. `recsys`.
    #[arg(long = "exclude-tag")]
    pub exclude_tag: Vec<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MemoryArgs {
    /// Model file path or preset name.
    pub model: String,
    #[arg(long, value_parser = parse_optimizer, default_value = "adam")]
    pub optimizer: OptimizerKind,
    /// Bytes per weight and per gradient element.
    #[arg(long, default_value_t = 4)]
    pub param_bytes: u64,
    /// Bytes per optimizer state element.
    #[arg(long, default_value_t = 4)]
    pub state_bytes: u64,
    #[arg(long)]
    pub checkpoint_every: Option<u64>,
    /// Emit checkpointed bytes and recompute overhead for every interval.
    #[arg(long, conflicts_with = "checkpoint_every")]
    pub checkpoint_sweep: bool,
    /// Linear-path tensors retained per layer by the activation model.
    #[arg(long, default_value_t = memwall::train_memory::DEFAULT_RETAINED_TENSORS)]
    pub retained_tensors: u64,
    #[arg(long, value_delimiter = ',', default_value = "512")]
    pub seq: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    pub batch: u64,
    /// Activation storage precision.
    #[arg(long, value_parser = parse_precision, default_value = "fp32")]
    pub precision: Precision,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn parse_precision(s: &str) -> Result<Precision, String> {
    s.parse().map_err(|e: memwall::Error| e.to_string())
}

fn parse_optimizer(s: &str) -> Result<OptimizerKind, String> {
    s.parse().map_err(|e: memwall::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    let invocation: Vec<String> = std::env::args().skip(1).collect();

    let result = match cli.command {
        Command::Analyze(args) => commands::analyze(&args).map(|r| (r, args.output)),
        Command::Roofline(args) => commands::roofline(&args).map(|r| (r, args.output)),
        Command::Trends(args) => commands::trends(&args).map(|r| (r, args.output)),
        Command::Memory(args) => commands::memory(&args).map(|r| (r, args.output)),
        Command::Preset { name } => {
            let config = memwall::preset(&name).expect("value parser restricts names");
            println!("{}", config.to_json());
            return ExitCode::SUCCESS;
        }
    };

    match result {
        Ok((mut report, output)) => {
            report.invocation = invocation;
            let text = report.render(output.format, output.emit);
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return CliError::Io("failed to write report".into()).exit_code();
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
