use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tasnet_core::{FlopConvention, MaskActivation, QuantBits, ScalingConfig};

/// Scalable Conv-TasNet: cost analysis, device fitting, separation and evaluation.
#[derive(Parser, Debug)]
#[command(name = "tasnet", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print parameters, compute, receptive field and memory of one configuration
    Analyze(AnalyzeArgs),
    /// Write the cost model over a grid of configurations as CSV
    Sweep(SweepArgs),
    /// Rank the configurations that fit a platform
    Fit(FitArgs),
    /// Separate a mono WAV file with a stored model
    Separate(SeparateArgs),
    /// Score estimated sources against references with permutation-invariant SI-SDR
    Eval(EvalArgs),
    /// Write a randomly initialized weight file
    InitRandom(InitRandomArgs),
}

/// Architecture hyperparameters outside the four scaling knobs.
#[derive(Args, Debug, Clone)]
pub struct BaseArch {
    /// Encoder filters
    #[arg(long = "N", default_value_t = 512)]
    pub encoder_filters: usize,
    /// Encoder kernel length in samples
    #[arg(long = "L", default_value_t = 16)]
    pub encoder_kernel: usize,
    /// Encoder hop in samples
    #[arg(long, default_value_t = 8)]
    pub stride: usize,
    /// Bottleneck channels
    #[arg(long, default_value_t = 128)]
    pub bottleneck: usize,
    /// Skip-connection channels
    #[arg(long, default_value_t = 128)]
    pub skip: usize,
    /// Depthwise kernel size
    #[arg(long = "P", default_value_t = 3)]
    pub conv_kernel: usize,
    #[arg(long, default_value_t = 2)]
    pub sources: usize,
    #[arg(long, default_value_t = 8000)]
    pub sample_rate: u32,
    #[arg(long, value_parser = parse_activation, default_value = "relu")]
    pub mask_activation: MaskActivation,
}

impl BaseArch {
    pub fn template(&self) -> ScalingConfig {
        ScalingConfig {
            encoder_filters: self.encoder_filters,
            encoder_kernel: self.encoder_kernel,
            encoder_stride: self.stride,
            bottleneck_channels: self.bottleneck,
            skip_channels: self.skip,
            conv_kernel: self.conv_kernel,
            num_sources: self.sources,
            sample_rate: self.sample_rate,
            mask_activation: self.mask_activation,
            ..ScalingConfig::baseline()
        }
    }
}

/// The four scaling knobs plus the fixed architecture.
#[derive(Args, Debug, Clone)]
pub struct ArchArgs {
    /// Dilated blocks per repeat
    #[arg(long = "B")]
    pub blocks: u32,
    /// Repeats of the block stack
    #[arg(long = "R")]
    pub repeats: u32,
    /// Depthwise channels
    #[arg(long = "C")]
    pub channels: usize,
    /// Exponential dilation base
    #[arg(long, default_value_t = 2)]
    pub dil_base: u64,
    #[command(flatten)]
    pub base: BaseArch,
}

impl ArchArgs {
    pub fn config(&self) -> ScalingConfig {
        ScalingConfig {
            num_blocks: self.blocks,
            num_repeats: self.repeats,
            depthwise_channels: self.channels,
            dilation_base: self.dil_base,
            ..self.base.template()
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    #[arg(long = "B-list", value_delimiter = ',', num_args = 1.., default_values_t = [2u32, 4, 6, 8])]
    pub blocks: Vec<u32>,
    #[arg(long = "R-list", value_delimiter = ',', num_args = 1.., default_values_t = [1u32, 2, 3])]
    pub repeats: Vec<u32>,
    #[arg(long = "C-list", value_delimiter = ',', num_args = 1.., default_values_t = [64usize, 128, 512])]
    pub channels: Vec<usize>,
    #[arg(long = "dil-list", value_delimiter = ',', num_args = 1.., default_values_t = [2u64])]
    pub bases: Vec<u64>,
    #[command(flatten)]
    pub base: BaseArch,
}

#[derive(ValueEnum, Debug, Clone, Copy, Default)]
pub enum FlopsArg {
    /// One MAC is one FLOP
    #[default]
    Mac,
    /// One MAC is a multiply and an add
    MulAdd,
}

impl From<FlopsArg> for FlopConvention {
    fn from(f: FlopsArg) -> Self {
        match f {
            FlopsArg::Mac => FlopConvention::MacIsFlop,
            FlopsArg::MulAdd => FlopConvention::MultiplyAdd,
        }
    }
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub arch: ArchArgs,
    /// Weight precision: 8, 16 or 32
    #[arg(long, value_parser = parse_quant, default_value = "32")]
    pub quant_bits: QuantBits,
    /// Seconds of audio held in activation buffers
    #[arg(long, default_value_t = 1.0)]
    pub chunk_seconds: f64,
    #[arg(long, value_enum, default_value_t = FlopsArg::Mac)]
    pub flops: FlopsArg,
    /// Emit a single JSON object
    #[arg(long)]
    pub json: bool,
    /// List every weight tensor name and shape
    #[arg(long)]
    pub dump_names: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_parser = parse_quant, default_value = "32")]
    pub quant_bits: QuantBits,
    /// CSV destination; standard output when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Builtin or registry platform name (case and punctuation insensitive)
    #[arg(long, conflicts_with_all = ["ram_kb", "mips"])]
    pub platform: Option<String>,
    #[arg(long, requires = "mips")]
    pub ram_kb: Option<u64>,
    #[arg(long, requires = "ram_kb")]
    pub mips: Option<f64>,
    /// Extra platforms, one `name, ram_kb, mips` per line
    #[arg(long)]
    pub platforms_file: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_parser = parse_quant, default_value = "32")]
    pub quant_bits: QuantBits,
    #[arg(long, default_value_t = 1.0)]
    pub mac_per_instr: f64,
    /// Share of RAM available to the separator
    #[arg(long, default_value_t = 0.75)]
    pub ram_fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    pub chunk_seconds: f64,
}

#[derive(Args, Debug)]
pub struct SeparateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Outputs are written to `<prefix>_src<k>.wav`
    #[arg(long)]
    pub output_prefix: String,
    /// Dilation base; not recoverable from the weights
    #[arg(long, default_value_t = 2)]
    pub dil_base: u64,
    #[arg(long, default_value_t = 8)]
    pub stride: usize,
    #[arg(long, default_value_t = 8000)]
    pub sample_rate: u32,
    #[arg(long, value_parser = parse_activation, default_value = "relu")]
    pub mask_activation: MaskActivation,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub est: Vec<PathBuf>,
    #[arg(long = "ref", num_args = 1.., required = true)]
    pub refs: Vec<PathBuf>,
    /// Clip reported values at this many dB
    #[arg(long)]
    pub cap_db: Option<f64>,
}

#[derive(Args, Debug)]
pub struct InitRandomArgs {
    #[command(flatten)]
    pub arch: ArchArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_quant(s: &str) -> Result<QuantBits, String> {
    let bits: u32 = s.parse().map_err(|_| format!("`{s}` is not an integer"))?;
    QuantBits::try_from(bits).map_err(|e| e.to_string())
}

fn parse_activation(s: &str) -> Result<MaskActivation, String> {
    s.parse().map_err(|e: tasnet_core::Error| e.to_string())
}
