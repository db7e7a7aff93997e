//! The scalable separation network.
//!
//! Signal path for a mixture of `T` samples:
//!
//! ```text
//! encoder conv (1 -> N, kernel L, stride) + ReLU
//!   -> gLN -> bottleneck 1x1 (N -> Bn)
//!   -> R x B residual blocks, block i using dilation base^(i mod B):
//!        1x1 (Bn -> C) -> PReLU -> gLN -> depthwise (C, P, dilation) -> PReLU -> gLN
//!        +-> residual 1x1 (C -> Bn), added to the block input
//!        +-> skip 1x1 (C -> Sk), summed over all blocks
//!   -> PReLU -> mask 1x1 (Sk -> S*N) -> mask activation
//!   -> per-source mask * encoder output -> transposed conv (N -> 1, kernel L, stride)
//! ```
//!
//! Tensor names follow a dotted scheme, see [`weight_layout`].

use rayon::prelude::*;

use crate::config::{dilation_schedule, MaskActivation, ScalingConfig};
use crate::error::{Error, Result};
use crate::io::{WeightStore, WeightTensor};
use crate::nn::{
    self, global_layer_norm_inplace, prelu_inplace, ConvSpec, Padding, Tensor2D, NORM_EPS,
};
use crate::rng::SplitMix64;

/// Slope every PReLU starts from in [`init_random`].
pub const INITIAL_PRELU_SLOPE: f32 = 0.25;

/// How a tensor is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorRole {
    /// Convolution kernel with the given fan-in.
    ConvWeight { fan_in: usize },
    ConvBias,
    NormGamma,
    NormBeta,
    PreluSlope,
}

/// Name, shape and role of one tensor of the architecture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSlot {
    pub name: String,
    pub shape: Vec<usize>,
    pub role: TensorRole,
}

impl TensorSlot {
    fn new(name: impl Into<String>, shape: &[usize], role: TensorRole) -> Self {
        Self {
            name: name.into(),
            shape: shape.to_vec(),
            role,
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Prefix of the tensors of residual block `block` in repeat `repeat`.
pub fn block_prefix(repeat: usize, block: usize) -> String {
    format!("sep.r{repeat}.b{block}")
}

/// Every tensor the architecture needs, in storage order.
///
/// Depends only on the channel/kernel sizes and on `B * R`; the dilation base
/// does not appear.
pub fn weight_layout(config: &ScalingConfig) -> Vec<TensorSlot> {
    use TensorRole::*;
    let n = config.encoder_filters;
    let l = config.encoder_kernel;
    let bn = config.bottleneck_channels;
    let sk = config.skip_channels;
    let c = config.depthwise_channels;
    let p = config.conv_kernel;
    let masks = config.num_sources * n;

    let mut slots = vec![
        TensorSlot::new("encoder.weight", &[n, 1, l], ConvWeight { fan_in: l }),
        TensorSlot::new("encoder.norm.gamma", &[n], NormGamma),
        TensorSlot::new("encoder.norm.beta", &[n], NormBeta),
        TensorSlot::new("bottleneck.weight", &[bn, n, 1], ConvWeight { fan_in: n }),
        TensorSlot::new("bottleneck.bias", &[bn], ConvBias),
    ];
    for r in 0..config.num_repeats as usize {
        for b in 0..config.num_blocks as usize {
            let pre = block_prefix(r, b);
            slots.extend([
                TensorSlot::new(format!("{pre}.expand.weight"), &[c, bn, 1], ConvWeight { fan_in: bn }),
                TensorSlot::new(format!("{pre}.expand.bias"), &[c], ConvBias),
                TensorSlot::new(format!("{pre}.prelu1.weight"), &[1], PreluSlope),
                TensorSlot::new(format!("{pre}.norm1.gamma"), &[c], NormGamma),
                TensorSlot::new(format!("{pre}.norm1.beta"), &[c], NormBeta),
                TensorSlot::new(format!("{pre}.depthwise.weight"), &[c, 1, p], ConvWeight { fan_in: p }),
                TensorSlot::new(format!("{pre}.depthwise.bias"), &[c], ConvBias),
                TensorSlot::new(format!("{pre}.prelu2.weight"), &[1], PreluSlope),
                TensorSlot::new(format!("{pre}.norm2.gamma"), &[c], NormGamma),
                TensorSlot::new(format!("{pre}.norm2.beta"), &[c], NormBeta),
                TensorSlot::new(format!("{pre}.residual.weight"), &[bn, c, 1], ConvWeight { fan_in: c }),
                TensorSlot::new(format!("{pre}.residual.bias"), &[bn], ConvBias),
                TensorSlot::new(format!("{pre}.skip.weight"), &[sk, c, 1], ConvWeight { fan_in: c }),
                TensorSlot::new(format!("{pre}.skip.bias"), &[sk], ConvBias),
            ]);
        }
    }
    slots.extend([
        TensorSlot::new("mask.prelu.weight", &[1], PreluSlope),
        TensorSlot::new("mask.weight", &[masks, sk, 1], ConvWeight { fan_in: sk }),
        TensorSlot::new("mask.bias", &[masks], ConvBias),
        TensorSlot::new("decoder.weight", &[n, 1, l], ConvWeight { fan_in: n }),
    ]);
    slots
}

/// Seeded weights: convolution kernels uniform in `±1/sqrt(fan_in)` drawn
/// from [`SplitMix64`] in layout order; biases and norm offsets zero, norm
/// gains one, PReLU slopes [`INITIAL_PRELU_SLOPE`].
pub fn init_random(config: &ScalingConfig, seed: u64) -> Result<WeightStore> {
    config.validate()?;
    let mut rng = SplitMix64::new(seed);
    let mut store = WeightStore::new();
    for slot in weight_layout(config) {
        let len = slot.len();
        let data = match slot.role {
            TensorRole::ConvWeight { fan_in } => {
                let scale = 1.0 / (fan_in as f64).sqrt();
                (0..len).map(|_| rng.uniform(scale)).collect()
            }
            TensorRole::ConvBias | TensorRole::NormBeta => vec![0.0; len],
            TensorRole::NormGamma => vec![1.0; len],
            TensorRole::PreluSlope => vec![INITIAL_PRELU_SLOPE; len],
        };
        store.insert(slot.name, WeightTensor::new(slot.shape, data)?)?;
    }
    Ok(store)
}

/// Recovers the architecture from tensor names and shapes.
///
/// Quantities that leave no trace in the weights (dilation base, encoder
/// stride, sample rate, mask activation) are taken from `template`.
pub fn infer_config(store: &WeightStore, template: &ScalingConfig) -> Result<ScalingConfig> {
    let shape = |name: &str| -> Result<&[usize]> {
        store.get(name).map(|t| t.shape.as_slice()).ok_or_else(|| Error::Load {
            tensor: name.to_string(),
            reason: "missing".into(),
        })
    };
    let dim = |name: &str, axis: usize| -> Result<usize> {
        shape(name)?.get(axis).copied().ok_or_else(|| Error::Load {
            tensor: name.to_string(),
            reason: format!("rank too small for axis {axis}"),
        })
    };

    let (mut repeats, mut blocks) = (0usize, 0usize);
    for name in store.names() {
        let Some(rest) = name.strip_prefix("sep.r") else {
            continue;
        };
        let parsed = rest.split_once(".b").and_then(|(r, tail)| {
            let b = tail.split('.').next()?;
            Some((r.parse::<usize>().ok()?, b.parse::<usize>().ok()?))
        });
        let (r, b) = parsed.ok_or_else(|| Error::Load {
            tensor: name.to_string(),
            reason: "unparseable block index".into(),
        })?;
        repeats = repeats.max(r + 1);
        blocks = blocks.max(b + 1);
    }
    if repeats == 0 {
        return Err(Error::Load {
            tensor: format!("{}.expand.weight", block_prefix(0, 0)),
            reason: "missing".into(),
        });
    }

    let first = block_prefix(0, 0);
    let encoder_filters = dim("encoder.weight", 0)?;
    let config = ScalingConfig {
        num_blocks: blocks as u32,
        num_repeats: repeats as u32,
        depthwise_channels: dim(&format!("{first}.expand.weight"), 0)?,
        encoder_filters,
        encoder_kernel: dim("encoder.weight", 2)?,
        bottleneck_channels: dim("bottleneck.weight", 0)?,
        skip_channels: dim(&format!("{first}.skip.weight"), 0)?,
        conv_kernel: dim(&format!("{first}.depthwise.weight"), 2)?,
        num_sources: dim("mask.weight", 0)? / encoder_filters.max(1),
        ..*template
    };
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Clone)]
struct Pointwise {
    out_channels: usize,
    weight: Vec<f32>,
    bias: Vec<f32>,
}

impl Pointwise {
    fn apply(&self, x: &Tensor2D) -> Result<Tensor2D> {
        nn::pointwise_conv(x, self.out_channels, &self.weight, Some(&self.bias))
    }
}

#[derive(Debug, Clone)]
struct Norm {
    gamma: Vec<f32>,
    beta: Vec<f32>,
}

impl Norm {
    fn apply(&self, x: &mut Tensor2D) -> Result<()> {
        global_layer_norm_inplace(x, &self.gamma, &self.beta, NORM_EPS)
    }
}

#[derive(Debug, Clone)]
struct ResidualBlock {
    expand: Pointwise,
    prelu1: f32,
    norm1: Norm,
    depthwise_weight: Vec<f32>,
    depthwise_bias: Vec<f32>,
    dilation: usize,
    prelu2: f32,
    norm2: Norm,
    residual: Pointwise,
    skip: Pointwise,
}

/// Immutable network ready for inference.
#[derive(Debug, Clone)]
pub struct SeparationModel {
    config: ScalingConfig,
    encoder: Vec<f32>,
    encoder_norm: Norm,
    bottleneck: Pointwise,
    blocks: Vec<ResidualBlock>,
    mask_prelu: f32,
    mask: Pointwise,
    decoder: Vec<f32>,
    param_count: u64,
}

struct Loader<'a> {
    store: &'a WeightStore,
    loaded: u64,
}

impl Loader<'_> {
    fn take(&mut self, name: &str, shape: &[usize]) -> Result<Vec<f32>> {
        let t = self.store.expect(name, shape)?;
        self.loaded += t.data.len() as u64;
        Ok(t.data.clone())
    }

    fn scalar(&mut self, name: &str) -> Result<f32> {
        Ok(self.take(name, &[1])?[0])
    }

    fn pointwise(&mut self, prefix: &str, out: usize, inp: usize) -> Result<Pointwise> {
        Ok(Pointwise {
            out_channels: out,
            weight: self.take(&format!("{prefix}.weight"), &[out, inp, 1])?,
            bias: self.take(&format!("{prefix}.bias"), &[out])?,
        })
    }

    fn norm(&mut self, prefix: &str, channels: usize) -> Result<Norm> {
        Ok(Norm {
            gamma: self.take(&format!("{prefix}.gamma"), &[channels])?,
            beta: self.take(&format!("{prefix}.beta"), &[channels])?,
        })
    }
}

/// Assembles a model from `weights`. Every tensor of [`weight_layout`] must
/// be present with the exact shape, and no other tensor may appear.
pub fn build_model(config: &ScalingConfig, weights: &WeightStore) -> Result<SeparationModel> {
    let dilations = dilation_schedule(config)?;
    let n = config.encoder_filters;
    let l = config.encoder_kernel;
    let bn = config.bottleneck_channels;
    let sk = config.skip_channels;
    let c = config.depthwise_channels;
    let p = config.conv_kernel;

    let mut ld = Loader {
        store: weights,
        loaded: 0,
    };
    let encoder = ld.take("encoder.weight", &[n, 1, l])?;
    let encoder_norm = ld.norm("encoder.norm", n)?;
    let bottleneck = ld.pointwise("bottleneck", bn, n)?;

    let mut blocks = Vec::with_capacity(dilations.len());
    for (i, &dilation) in dilations.iter().enumerate() {
        let pre = block_prefix(i / config.num_blocks as usize, i % config.num_blocks as usize);
        let dilation = usize::try_from(dilation)
            .map_err(|_| Error::Config(format!("dilation {dilation} exceeds usize")))?;
        blocks.push(ResidualBlock {
            expand: ld.pointwise(&format!("{pre}.expand"), c, bn)?,
            prelu1: ld.scalar(&format!("{pre}.prelu1.weight"))?,
            norm1: ld.norm(&format!("{pre}.norm1"), c)?,
            depthwise_weight: ld.take(&format!("{pre}.depthwise.weight"), &[c, 1, p])?,
            depthwise_bias: ld.take(&format!("{pre}.depthwise.bias"), &[c])?,
            dilation,
            prelu2: ld.scalar(&format!("{pre}.prelu2.weight"))?,
            norm2: ld.norm(&format!("{pre}.norm2"), c)?,
            residual: ld.pointwise(&format!("{pre}.residual"), bn, c)?,
            skip: ld.pointwise(&format!("{pre}.skip"), sk, c)?,
        });
    }
    let mask_prelu = ld.scalar("mask.prelu.weight")?;
    let mask = ld.pointwise("mask", config.num_sources * n, sk)?;
    let decoder = ld.take("decoder.weight", &[n, 1, l])?;

    if ld.loaded != weights.scalar_count() {
        let expected: std::collections::HashSet<String> =
            weight_layout(config).into_iter().map(|s| s.name).collect();
        let extra = weights
            .names()
            .find(|name| !expected.contains(*name))
            .unwrap_or("<unknown>")
            .to_string();
        return Err(Error::Load {
            tensor: extra,
            reason: "not part of this architecture".into(),
        });
    }

    Ok(SeparationModel {
        config: *config,
        encoder,
        encoder_norm,
        bottleneck,
        blocks,
        mask_prelu,
        mask,
        decoder,
        param_count: ld.loaded,
    })
}

/// Encoder output and masks of one forward pass.
#[derive(Debug, Clone)]
pub struct Masks {
    /// `N x frames` encoded mixture (after ReLU).
    pub encoded: Tensor2D,
    /// `(sources * N) x frames`; rows `s*N..(s+1)*N` belong to source `s`.
    pub masks: Tensor2D,
    /// Input length after zero-padding to the frame grid.
    pub padded_len: usize,
}

impl SeparationModel {
    pub fn config(&self) -> &ScalingConfig {
        &self.config
    }

    /// Number of scalar weights held by the model.
    pub fn param_count(&self) -> u64 {
        self.param_count
    }

    /// Dilations of the residual blocks in execution order.
    pub fn dilations(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dilation).collect()
    }

    /// Length after zero-padding `len` so that the encoder covers it with a
    /// whole number of frames.
    pub fn padded_len(&self, len: usize) -> usize {
        let l = self.config.encoder_kernel;
        let stride = self.config.encoder_stride;
        l + (len.saturating_sub(l)).div_ceil(stride) * stride
    }

    /// Runs the encoder and separator and returns the masks.
    pub fn estimate_masks(&self, audio: &[f32]) -> Result<Masks> {
        let cfg = &self.config;
        let n = cfg.encoder_filters;
        if audio.len() < cfg.encoder_kernel {
            return Err(Error::InputTooShort {
                len: audio.len(),
                min: cfg.encoder_kernel,
            });
        }
        if let Some(i) = audio.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite input sample at index {i}")));
        }
        let padded_len = self.padded_len(audio.len());
        let mut padded = audio.to_vec();
        padded.resize(padded_len, 0.0);

        let encoder = ConvSpec::new(1, n, cfg.encoder_kernel)
            .with_stride(cfg.encoder_stride)
            .with_padding(Padding::Valid)
            .with_bias(false);
        let mut encoded = nn::conv1d(&Tensor2D::from_signal(&padded)?, &encoder, &self.encoder, None)?;
        encoded.map_inplace(|v| v.max(0.0));

        let mut x = encoded.clone();
        self.encoder_norm.apply(&mut x)?;
        let mut x = self.bottleneck.apply(&x)?;

        let mut skip_sum = Tensor2D::zeros(cfg.skip_channels, x.frames())?;
        for block in &self.blocks {
            let mut h = block.expand.apply(&x)?;
            prelu_inplace(&mut h, block.prelu1);
            block.norm1.apply(&mut h)?;
            let mut h = nn::depthwise_conv(
                &h,
                cfg.conv_kernel,
                block.dilation,
                &block.depthwise_weight,
                Some(&block.depthwise_bias),
            )?;
            prelu_inplace(&mut h, block.prelu2);
            block.norm2.apply(&mut h)?;
            x.add_assign(&block.residual.apply(&h)?)?;
            skip_sum.add_assign(&block.skip.apply(&h)?)?;
        }

        prelu_inplace(&mut skip_sum, self.mask_prelu);
        let mut masks = self.mask.apply(&skip_sum)?;
        apply_mask_activation(&mut masks, cfg.mask_activation, cfg.num_sources, n);
        Ok(Masks {
            encoded,
            masks,
            padded_len,
        })
    }

    /// Separates a mixture into `num_sources` signals of the input's length.
    pub fn separate(&self, audio: &[f32]) -> Result<Vec<Vec<f32>>> {
        let Masks {
            encoded, masks, ..
        } = self.estimate_masks(audio)?;
        let cfg = &self.config;
        let n = cfg.encoder_filters;
        (0..cfg.num_sources)
            .into_par_iter()
            .map(|s| {
                let mut masked = masks.slice_channels(s * n, n)?;
                masked.mul_assign(&encoded)?;
                let mut out = nn::transposed_conv1d(
                    &masked,
                    cfg.encoder_kernel,
                    cfg.encoder_stride,
                    &self.decoder,
                )?
                .into_data();
                out.truncate(audio.len());
                Ok(out)
            })
            .collect()
    }
}

fn apply_mask_activation(masks: &mut Tensor2D, activation: MaskActivation, sources: usize, n: usize) {
    match activation {
        MaskActivation::Relu => masks.map_inplace(|v| v.max(0.0)),
        MaskActivation::Sigmoid => masks.map_inplace(|v| (1.0 / (1.0 + (-(v as f64)).exp())) as f32),
        MaskActivation::Softmax => {
            let frames = masks.frames();
            let data = masks.data_mut();
            let mut logits = vec![0.0f64; sources];
            for feature in 0..n {
                for t in 0..frames {
                    let idx = |s: usize| (s * n + feature) * frames + t;
                    for (s, logit) in logits.iter_mut().enumerate() {
                        *logit = data[idx(s)] as f64;
                    }
                    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let total: f64 = logits.iter().map(|v| (v - max).exp()).sum();
                    for (s, logit) in logits.iter().enumerate() {
                        data[idx(s)] = ((logit - max).exp() / total) as f32;
                    }
                }
            }
        }
    }
}
