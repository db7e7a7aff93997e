//! Closed-form cost accounting: parameters, MACs, receptive field, memory.
//!
//! Everything here is computed from the [`ScalingConfig`] alone; no model is
//! materialized.

use serde::Serialize;

use crate::config::ScalingConfig;
use crate::error::{Error, Result};

/// Storage width of one weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(into = "u32")]
pub enum QuantBits {
    Int8,
    Half,
    Float,
}

impl QuantBits {
    pub const ALL: [QuantBits; 3] = [QuantBits::Int8, QuantBits::Half, QuantBits::Float];

    pub fn bits(self) -> u32 {
        match self {
            Self::Int8 => 8,
            Self::Half => 16,
            Self::Float => 32,
        }
    }

    pub fn bytes(self) -> u64 {
        self.bits() as u64 / 8
    }
}

impl From<QuantBits> for u32 {
    fn from(q: QuantBits) -> u32 {
        q.bits()
    }
}

impl TryFrom<u32> for QuantBits {
    type Error = Error;

    fn try_from(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(Self::Int8),
            16 => Ok(Self::Half),
            32 => Ok(Self::Float),
            other => Err(Error::Config(format!(
                "quantization must be 8, 16 or 32 bits, got {other}"
            ))),
        }
    }
}

/// How many FLOPs a multiply-accumulate is worth when reporting GFLOPs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlopConvention {
    /// One MAC counts as one FLOP.
    #[default]
    MacIsFlop,
    /// One MAC counts as a multiply plus an add.
    MultiplyAdd,
}

impl FlopConvention {
    pub fn flops_per_mac(self) -> u64 {
        match self {
            Self::MacIsFlop => 1,
            Self::MultiplyAdd => 2,
        }
    }
}

/// Exact number of scalar weights, biases, norm affines and PReLU slopes.
pub fn count_params(config: &ScalingConfig) -> u64 {
    let n = config.encoder_filters as u64;
    let l = config.encoder_kernel as u64;
    let bn = config.bottleneck_channels as u64;
    let sk = config.skip_channels as u64;
    let c = config.depthwise_channels as u64;
    let p = config.conv_kernel as u64;
    let masks = config.num_sources as u64 * n;

    let encoder = n * l + 2 * n;
    let bottleneck = n * bn + bn;
    let block = (bn * c + c) // expand
        + 2 // PReLU slopes
        + 4 * c // two norms
        + (c * p + c) // depthwise
        + (c * bn + bn) // residual
        + (c * sk + sk); // skip
    let head = 1 + sk * masks + masks;
    let decoder = n * l;
    encoder + bottleneck + config.total_blocks() as u64 * block + head + decoder
}

/// Round-half-up thousands.
pub fn params_k(params: u64) -> u64 {
    (params + 500) / 1000
}

/// Encoder frames covering `seconds` of audio, `ceil(seconds * rate / stride)`.
pub fn frames_for(config: &ScalingConfig, seconds: f64) -> u64 {
    (seconds * config.sample_rate as f64 / config.encoder_stride as f64).ceil() as u64
}

/// MACs of every convolution for one encoder frame. Dilation and padding do
/// not change this count.
pub fn macs_per_frame(config: &ScalingConfig) -> u64 {
    let n = config.encoder_filters as u64;
    let l = config.encoder_kernel as u64;
    let bn = config.bottleneck_channels as u64;
    let sk = config.skip_channels as u64;
    let c = config.depthwise_channels as u64;
    let p = config.conv_kernel as u64;
    let sources = config.num_sources as u64;

    let encoder = n * l;
    let bottleneck = n * bn;
    let block = bn * c + c * p + c * bn + c * sk;
    let mask = sk * sources * n;
    let decoder = sources * n * l;
    encoder + bottleneck + config.total_blocks() as u64 * block + mask + decoder
}

/// Convolution MACs for `seconds` of input. Normalization and activations
/// are excluded; see [`minor_ops_per_frame`].
pub fn count_macs(config: &ScalingConfig, seconds: f64) -> Result<u64> {
    if !(seconds > 0.0) || !seconds.is_finite() {
        return Err(Error::Config(format!("duration must be positive, got {seconds}")));
    }
    Ok(frames_for(config, seconds) * macs_per_frame(config))
}

/// Rough count of the elementwise work left out of [`count_macs`]: five ops
/// per normalized element, one per activation, mask product and
/// residual/skip addition.
pub fn minor_ops_per_frame(config: &ScalingConfig) -> u64 {
    let n = config.encoder_filters as u64;
    let bn = config.bottleneck_channels as u64;
    let sk = config.skip_channels as u64;
    let c = config.depthwise_channels as u64;
    let masks = config.num_sources as u64 * n;
    let per_block = 5 * 2 * c + 2 * c + bn + sk;
    n + 5 * n + config.total_blocks() as u64 * per_block + sk + 2 * masks
}

/// Temporal span seen by one output frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReceptiveField {
    pub frames: u64,
    pub samples: u64,
    pub ms: f64,
}

/// `frames = 1 + R (P - 1) sum_i base^(i-1)`, converted to samples through
/// the encoder stride and kernel.
pub fn receptive_field(config: &ScalingConfig) -> Result<ReceptiveField> {
    config.validate()?;
    let overflow = || Error::Config("receptive field overflows 64 bits".into());
    let mut dilation_sum = 0u64;
    let mut d = 1u64;
    for i in 0..config.num_blocks {
        if i > 0 {
            d = d.checked_mul(config.dilation_base).ok_or_else(overflow)?;
        }
        dilation_sum = dilation_sum.checked_add(d).ok_or_else(overflow)?;
    }
    let frames = dilation_sum
        .checked_mul((config.conv_kernel as u64 - 1) * config.num_repeats as u64)
        .and_then(|v| v.checked_add(1))
        .ok_or_else(overflow)?;
    let samples = (frames - 1)
        .checked_mul(config.encoder_stride as u64)
        .and_then(|v| v.checked_add(config.encoder_kernel as u64))
        .ok_or_else(overflow)?;
    Ok(ReceptiveField {
        frames,
        samples,
        ms: 1000.0 * samples as f64 / config.sample_rate as f64,
    })
}

/// Bytes needed to hold the weights and the working activations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MemoryFootprint {
    pub model_bytes: u64,
    pub activation_bytes: u64,
}

impl MemoryFootprint {
    pub fn total(&self) -> u64 {
        self.model_bytes + self.activation_bytes
    }
}

/// Widest activation produced anywhere in the network, in channels.
pub fn widest_layer(config: &ScalingConfig) -> usize {
    [
        config.num_sources * config.encoder_filters,
        config.encoder_filters,
        config.depthwise_channels,
        config.bottleneck_channels,
        config.skip_channels,
    ]
    .into_iter()
    .max()
    .unwrap_or(0)
}

/// Weights at `quant` precision plus 32-bit activations for a chunk: two
/// ping-pong buffers of the widest layer, the skip accumulator and the
/// residual carry.
pub fn peak_memory(
    config: &ScalingConfig,
    quant: QuantBits,
    chunk_seconds: f64,
) -> Result<MemoryFootprint> {
    if !(chunk_seconds > 0.0) || !chunk_seconds.is_finite() {
        return Err(Error::Config(format!(
            "chunk duration must be positive, got {chunk_seconds}"
        )));
    }
    let live_channels =
        2 * widest_layer(config) + config.skip_channels + config.bottleneck_channels;
    Ok(MemoryFootprint {
        model_bytes: count_params(config) * quant.bytes(),
        activation_bytes: live_channels as u64 * frames_for(config, chunk_seconds) * 4,
    })
}

/// Knobs of a cost report that are not part of the architecture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostOptions {
    pub quant: QuantBits,
    pub chunk_seconds: f64,
    pub flops: FlopConvention,
}

impl Default for CostOptions {
    fn default() -> Self {
        Self {
            quant: QuantBits::Float,
            chunk_seconds: 1.0,
            flops: FlopConvention::MacIsFlop,
        }
    }
}

/// Everything the analytical model says about one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub params: u64,
    pub params_k: u64,
    pub macs_per_second: u64,
    pub gflops_per_second: f64,
    pub minor_ops_per_second: u64,
    pub receptive_field_frames: u64,
    pub receptive_field_samples: u64,
    pub receptive_field_ms: f64,
    pub quant_bits: u32,
    pub model_bytes: u64,
    pub peak_activation_bytes: u64,
}

impl CostReport {
    pub fn compute(config: &ScalingConfig, options: &CostOptions) -> Result<Self> {
        config.validate()?;
        let params = count_params(config);
        let macs_per_second = count_macs(config, 1.0)?;
        let rf = receptive_field(config)?;
        let memory = peak_memory(config, options.quant, options.chunk_seconds)?;
        Ok(Self {
            params,
            params_k: params_k(params),
            macs_per_second,
            gflops_per_second: (macs_per_second * options.flops.flops_per_mac()) as f64 / 1e9,
            minor_ops_per_second: frames_for(config, 1.0) * minor_ops_per_frame(config),
            receptive_field_frames: rf.frames,
            receptive_field_samples: rf.samples,
            receptive_field_ms: rf.ms,
            quant_bits: options.quant.bits(),
            model_bytes: memory.model_bytes,
            peak_activation_bytes: memory.activation_bytes,
        })
    }
}
