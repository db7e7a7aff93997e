//! Architecture knobs of the scalable separator.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Non-linearity applied to the mask head output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskActivation {
    #[default]
    Relu,
    Sigmoid,
    /// Softmax across sources, independently per feature and frame.
    Softmax,
}

impl fmt::Display for MaskActivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Relu => "relu",
            Self::Sigmoid => "sigmoid",
            Self::Softmax => "softmax",
        })
    }
}

impl FromStr for MaskActivation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Self::Relu),
            "sigmoid" => Ok(Self::Sigmoid),
            "softmax" => Ok(Self::Softmax),
            other => Err(Error::Config(format!("unknown mask activation `{other}`"))),
        }
    }
}

/// Full description of one member of the model family.
///
/// `num_blocks`, `num_repeats`, `depthwise_channels` and `dilation_base` are
/// the scaling knobs; everything else defaults to the reference architecture
/// (512 encoder filters of 16 samples at stride 8, 128-wide bottleneck and
/// skip paths, depthwise kernel 3, two sources at 8 kHz).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub num_blocks: u32,
    pub num_repeats: u32,
    pub depthwise_channels: usize,
    pub dilation_base: u64,
    pub encoder_filters: usize,
    pub encoder_kernel: usize,
    pub encoder_stride: usize,
    pub bottleneck_channels: usize,
    pub skip_channels: usize,
    pub conv_kernel: usize,
    pub num_sources: usize,
    pub sample_rate: u32,
    pub mask_activation: MaskActivation,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self::baseline()
    }
}

impl ScalingConfig {
    pub const MAX_BLOCKS: u32 = 12;
    pub const MAX_REPEATS: u32 = 4;

    /// B=8, R=3, C=512, dilation base 2.
    pub fn baseline() -> Self {
        Self {
            num_blocks: 8,
            num_repeats: 3,
            depthwise_channels: 512,
            dilation_base: 2,
            encoder_filters: 512,
            encoder_kernel: 16,
            encoder_stride: 8,
            bottleneck_channels: 128,
            skip_channels: 128,
            conv_kernel: 3,
            num_sources: 2,
            sample_rate: 8000,
            mask_activation: MaskActivation::Relu,
        }
    }

    /// Baseline architecture with the four scaling knobs replaced.
    pub fn scaled(blocks: u32, repeats: u32, channels: usize, dilation_base: u64) -> Self {
        Self {
            num_blocks: blocks,
            num_repeats: repeats,
            depthwise_channels: channels,
            dilation_base,
            ..Self::baseline()
        }
    }

    pub fn with_mask_activation(mut self, activation: MaskActivation) -> Self {
        self.mask_activation = activation;
        self
    }

    /// Knob tuple `(B, R, C, base)`, used as a lookup and sort key.
    pub fn key(&self) -> (u32, u32, usize, u64) {
        (
            self.num_blocks,
            self.num_repeats,
            self.depthwise_channels,
            self.dilation_base,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=Self::MAX_BLOCKS).contains(&self.num_blocks) {
            return Err(Error::Config(format!(
                "num_blocks must be in 1..={}, got {}",
                Self::MAX_BLOCKS,
                self.num_blocks
            )));
        }
        if !(1..=Self::MAX_REPEATS).contains(&self.num_repeats) {
            return Err(Error::Config(format!(
                "num_repeats must be in 1..={}, got {}",
                Self::MAX_REPEATS,
                self.num_repeats
            )));
        }
        if self.dilation_base < 2 {
            return Err(Error::Config(format!(
                "dilation_base must be at least 2, got {}",
                self.dilation_base
            )));
        }
        let positive = [
            ("depthwise_channels", self.depthwise_channels),
            ("encoder_filters", self.encoder_filters),
            ("encoder_kernel", self.encoder_kernel),
            ("encoder_stride", self.encoder_stride),
            ("bottleneck_channels", self.bottleneck_channels),
            ("skip_channels", self.skip_channels),
            ("conv_kernel", self.conv_kernel),
            ("num_sources", self.num_sources),
            ("sample_rate", self.sample_rate as usize),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.encoder_stride > self.encoder_kernel {
            return Err(Error::Config(format!(
                "encoder_stride {} exceeds encoder_kernel {}",
                self.encoder_stride, self.encoder_kernel
            )));
        }
        self.max_dilation().map(|_| ())
    }

    /// `base^(B-1)`, checked for 64-bit overflow.
    pub fn max_dilation(&self) -> Result<u64> {
        self.dilation_base
            .checked_pow(self.num_blocks.saturating_sub(1))
            .ok_or_else(|| {
                Error::Config(format!(
                    "dilation {}^{} overflows 64 bits",
                    self.dilation_base,
                    self.num_blocks - 1
                ))
            })
    }

    /// Total number of residual blocks, `B * R`.
    pub fn total_blocks(&self) -> usize {
        (self.num_blocks * self.num_repeats) as usize
    }
}

/// Dilation of every residual block in execution order: the sequence
/// `base^0, base^1, ..., base^(B-1)` repeated `R` times.
pub fn dilation_schedule(config: &ScalingConfig) -> Result<Vec<u64>> {
    config.validate()?;
    let mut one_repeat = Vec::with_capacity(config.num_blocks as usize);
    let mut d = 1u64;
    for i in 0..config.num_blocks {
        if i > 0 {
            d = d.checked_mul(config.dilation_base).ok_or_else(|| {
                Error::Config("dilation schedule overflows 64 bits".into())
            })?;
        }
        one_repeat.push(d);
    }
    Ok(one_repeat
        .iter()
        .copied()
        .cycle()
        .take(config.total_blocks())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_knobs() {
        let c = ScalingConfig::baseline();
        assert_eq!(c.key(), (8, 3, 512, 2));
        assert_eq!(c.total_blocks(), 24);
        c.validate().unwrap();
    }

    #[test]
    fn schedule_base_two() {
        let c = ScalingConfig::scaled(8, 1, 512, 2);
        assert_eq!(dilation_schedule(&c).unwrap(), [1, 2, 4, 8, 16, 32, 64, 128]);
    }

    #[test]
    fn schedule_base_four() {
        let c = ScalingConfig::scaled(4, 1, 512, 4);
        assert_eq!(dilation_schedule(&c).unwrap(), [1, 4, 16, 64]);
    }

    #[test]
    fn schedule_single_block_repeated() {
        let c = ScalingConfig::scaled(1, 2, 64, 8);
        assert_eq!(dilation_schedule(&c).unwrap(), [1, 1]);
    }

    #[test]
    fn schedule_repeats_cycle() {
        let c = ScalingConfig::scaled(3, 2, 64, 2);
        assert_eq!(dilation_schedule(&c).unwrap(), [1, 2, 4, 1, 2, 4]);
    }

    #[test]
    fn overflowing_dilation_is_rejected() {
        // 2^64 does not fit; 12 blocks with base 2^6 needs 6*11 = 66 bits.
        let c = ScalingConfig::scaled(12, 1, 64, 64);
        assert!(matches!(dilation_schedule(&c), Err(Error::Config(_))));
        assert!(c.validate().is_err());
    }

    #[test]
    fn knob_ranges_enforced() {
        assert!(ScalingConfig::scaled(0, 1, 64, 2).validate().is_err());
        assert!(ScalingConfig::scaled(13, 1, 64, 2).validate().is_err());
        assert!(ScalingConfig::scaled(2, 5, 64, 2).validate().is_err());
        assert!(ScalingConfig::scaled(2, 1, 0, 2).validate().is_err());
        assert!(ScalingConfig::scaled(2, 1, 64, 1).validate().is_err());
    }

    #[test]
    fn mask_activation_parses() {
        assert_eq!("ReLU".parse::<MaskActivation>().unwrap(), MaskActivation::Relu);
        assert_eq!("softmax".parse::<MaskActivation>().unwrap(), MaskActivation::Softmax);
        assert!("tanh".parse::<MaskActivation>().is_err());
    }
}
