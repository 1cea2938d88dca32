mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::{code, CliError};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  other failure
  2  usage error (unknown subcommand, bad flag or value)
  3  file could not be read or written
  4  invalid model, dataset or argument
  5  quantization failed (thresholds do not fit the format)
  6  no bit-width meets the baseline accuracy
  7  netlist construction or Verilog emission failed";

/// Toolchain for DWN accelerators with fixed-point inputs: thresholds,
/// quantization, bit-exact simulation, LUT netlists and Verilog.
#[derive(Debug, Parser)]
#[command(name = "dwn", version, after_help = EXIT_CODES)]
pub struct Cli {
    /// Seed for every random choice
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Print machine-readable JSON on stdout
    #[arg(long, global = true)]
    pub json: bool,
    /// Suppress warnings; results and errors are still printed
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write per-feature thermometer thresholds as CSV
    Thresholds(ThresholdsArgs),
    /// Write a synthetic Gaussian-blob dataset
    SynthBlobs(BlobArgs),
    /// Fit a model with the deterministic toy trainer
    TrainToy(TrainArgs),
    /// Re-express a model's thresholds in (1,n) fixed point
    Quantize(QuantizeArgs),
    /// Search the smallest input width that keeps a baseline accuracy
    Ptq(PtqArgs),
    /// Run the golden model over a dataset
    Simulate(SimulateArgs),
    /// Print the accuracy of a model on a dataset
    Accuracy(DataModelArgs),
    /// Emit Verilog, a self-checking testbench and golden vectors
    Generate(GenerateArgs),
    /// Per-component LUT breakdown across input widths
    Report(ReportArgs),
    /// Normalize, fit, search, quantize, map, report and emit in one go
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset CSV: feature columns, then an integer label
    #[arg(long)]
    pub data: PathBuf,
    /// Skip the first line of the CSV
    #[arg(long)]
    pub skip_header: bool,
}

#[derive(Debug, Args)]
pub struct ShapeArgs {
    /// Named model shape
    #[arg(long, value_parser = ["sm-10", "sm-50", "md-360", "lg-2400"], conflicts_with = "custom_shape")]
    pub preset: Option<String>,
    /// Custom shape as F,T,k,C,luts_per_class
    #[arg(long, value_name = "F,T,K,C,LPC")]
    pub custom_shape: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThresholdMode {
    Uniform,
    Distributive,
    Both,
}

#[derive(Debug, Args)]
pub struct ThresholdsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Thresholds per feature
    #[arg(long, short = 't')]
    pub bits: usize,
    #[arg(long, value_enum, default_value_t = ThresholdMode::Both)]
    pub mode: ThresholdMode,
    /// Use the raw values instead of normalizing to [-1, 1)
    #[arg(long)]
    pub raw: bool,
    /// Output CSV (stdout if omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BlobArgs {
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 16)]
    pub features: usize,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    /// Standard deviation of every blob
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Maximum number of single-bit table flips after the vote
    #[arg(long, default_value_t = 64)]
    pub hill_climb_budget: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct QuantizeArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Fractional bits n; inputs become n + 1 bits wide
    #[arg(long, short = 'n')]
    pub frac_bits: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PtqArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Accuracy to keep (default: the unquantized model's accuracy)
    #[arg(long)]
    pub baseline: Option<f64>,
    #[arg(long, default_value_t = dwn_core::quantize::DEFAULT_N_MAX)]
    pub n_max: u32,
    /// Write the sweep trace as CSV
    #[arg(long)]
    pub emit_trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DataModelArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub inner: DataModelArgs,
    /// Write one row per sample: index, label, predicted class, score
    #[arg(long)]
    pub emit_predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HdlArgs {
    /// Verilog module name (default: derived from the model name)
    #[arg(long)]
    pub module_name: Option<String>,
    /// Register inputs and outputs on a clock
    #[arg(long)]
    pub registered_io: bool,
    /// Number of testbench vectors
    #[arg(long, default_value_t = 1000, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    pub tb_vectors: usize,
    /// Inputs per LUT of the mapping target (3..=6)
    #[arg(long, default_value_t = 6)]
    pub lut_size: usize,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Fixed-point model
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub hdl: HdlArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Model to quantize and map at every width
    #[arg(long, required_unless_present_any = ["preset", "custom_shape"])]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Input widths w = n + 1, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [6u32, 8, 9])]
    pub widths: Vec<u32>,
    #[arg(long, default_value_t = 6)]
    pub lut_size: usize,
    /// Output CSV (stdout if omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Start from this model instead of fitting one
    #[arg(long, conflicts_with_all = ["preset", "custom_shape"])]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub baseline: Option<f64>,
    #[arg(long, default_value_t = dwn_core::quantize::DEFAULT_N_MAX)]
    pub n_max: u32,
    #[arg(long, default_value_t = 64)]
    pub hill_climb_budget: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub hdl: HdlArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { code::USAGE as u8 } else { 0 });
        }
    };
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError { code, message }) => {
            eprintln!("error: {}", message.replace('\n', " "));
            ExitCode::from(code as u8)
        }
    }
}
