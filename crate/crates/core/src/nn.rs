//! Inference-only 1-D neural primitives.
//!
//! All tensors are channels-first and row-major: element `(c, t)` lives at
//! `c * frames + t`. Weights follow the usual `[out, in / groups, kernel]`
//! layout. Reductions accumulate in `f64` and store back to `f32`.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Default epsilon for [`global_layer_norm`].
pub const NORM_EPS: f32 = 1e-8;

/// A dense `channels x frames` signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2D {
    channels: usize,
    frames: usize,
    data: Vec<f32>,
}

impl Tensor2D {
    pub fn new(channels: usize, frames: usize, data: Vec<f32>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::Config("tensor must have at least one channel".into()));
        }
        if frames == 0 {
            return Err(Error::Config("tensor must have at least one frame".into()));
        }
        if data.len() != channels * frames {
            return Err(Error::Dimension {
                axis: "data",
                expected: channels * frames,
                found: data.len(),
            });
        }
        Ok(Self {
            channels,
            frames,
            data,
        })
    }

    pub fn zeros(channels: usize, frames: usize) -> Result<Self> {
        Self::new(channels, frames, vec![0.0; channels * frames])
    }

    /// Single-channel tensor holding `samples`.
    pub fn from_signal(samples: &[f32]) -> Result<Self> {
        Self::new(1, samples.len(), samples.to_vec())
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn row(&self, channel: usize) -> &[f32] {
        &self.data[channel * self.frames..(channel + 1) * self.frames]
    }

    pub fn row_mut(&mut self, channel: usize) -> &mut [f32] {
        &mut self.data[channel * self.frames..(channel + 1) * self.frames]
    }

    pub fn get(&self, channel: usize, frame: usize) -> f32 {
        self.data[channel * self.frames + frame]
    }

    /// Copy of channels `start..start + count`.
    pub fn slice_channels(&self, start: usize, count: usize) -> Result<Self> {
        if start + count > self.channels {
            return Err(Error::Dimension {
                axis: "channels",
                expected: self.channels,
                found: start + count,
            });
        }
        let lo = start * self.frames;
        Self::new(
            count,
            self.frames,
            self.data[lo..lo + count * self.frames].to_vec(),
        )
    }

    /// Elementwise `self += other`.
    pub fn add_assign(&mut self, other: &Tensor2D) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
        Ok(())
    }

    /// Elementwise `self *= other`.
    pub fn mul_assign(&mut self, other: &Tensor2D) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a *= *b;
        }
        Ok(())
    }

    pub fn map_inplace(&mut self, f: impl Fn(f32) -> f32) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn check_same_shape(&self, other: &Tensor2D) -> Result<()> {
        if self.channels != other.channels {
            return Err(Error::Dimension {
                axis: "channels",
                expected: self.channels,
                found: other.channels,
            });
        }
        if self.frames != other.frames {
            return Err(Error::Dimension {
                axis: "frames",
                expected: self.frames,
                found: other.frames,
            });
        }
        Ok(())
    }
}

/// Zero-padding policy of a convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Padding {
    /// Symmetric zero padding of `dilation * (kernel - 1)` in total, left
    /// side gets the floor half. With stride 1 the frame count is preserved.
    #[default]
    Same,
    /// No padding.
    Valid,
}

/// Geometry of a 1-D convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub dilation: usize,
    pub stride: usize,
    pub groups: usize,
    pub bias: bool,
    pub padding: Padding,
}

impl ConvSpec {
    /// Dense "same" convolution with stride 1 and a bias.
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel,
            dilation: 1,
            stride: 1,
            groups: 1,
            bias: true,
            padding: Padding::Same,
        }
    }

    pub fn with_dilation(mut self, dilation: usize) -> Self {
        self.dilation = dilation;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_groups(mut self, groups: usize) -> Self {
        self.groups = groups;
        self
    }

    pub fn with_bias(mut self, bias: bool) -> Self {
        self.bias = bias;
        self
    }

    pub fn with_padding(mut self, padding: Padding) -> Self {
        self.padding = padding;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("in_channels", self.in_channels),
            ("out_channels", self.out_channels),
            ("kernel", self.kernel),
            ("dilation", self.dilation),
            ("stride", self.stride),
            ("groups", self.groups),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.in_channels % self.groups != 0 || self.out_channels % self.groups != 0 {
            return Err(Error::Config(format!(
                "channels {}->{} not divisible by groups {}",
                self.in_channels, self.out_channels, self.groups
            )));
        }
        Ok(())
    }

    /// Number of weight scalars, `out * (in / groups) * kernel`.
    pub fn weight_len(&self) -> usize {
        self.out_channels * (self.in_channels / self.groups) * self.kernel
    }

    /// Span of the dilated kernel in frames.
    pub fn effective_kernel(&self) -> usize {
        self.dilation * (self.kernel - 1) + 1
    }

    fn total_padding(&self) -> usize {
        match self.padding {
            Padding::Same => self.dilation * (self.kernel - 1),
            Padding::Valid => 0,
        }
    }

    /// Output frame count for `input_frames`, or `None` if the input is
    /// shorter than the (padded) kernel span.
    pub fn output_frames(&self, input_frames: usize) -> Option<usize> {
        let padded = input_frames + self.total_padding();
        let span = self.effective_kernel();
        (padded >= span).then(|| (padded - span) / self.stride + 1)
    }
}

/// Grouped, dilated, strided 1-D convolution.
pub fn conv1d(
    input: &Tensor2D,
    spec: &ConvSpec,
    weights: &[f32],
    bias: Option<&[f32]>,
) -> Result<Tensor2D> {
    spec.validate()?;
    if input.channels != spec.in_channels {
        return Err(Error::Dimension {
            axis: "input channels",
            expected: spec.in_channels,
            found: input.channels,
        });
    }
    if weights.len() != spec.weight_len() {
        return Err(Error::Dimension {
            axis: "weights",
            expected: spec.weight_len(),
            found: weights.len(),
        });
    }
    match (spec.bias, bias) {
        (true, Some(b)) if b.len() != spec.out_channels => {
            return Err(Error::Dimension {
                axis: "bias",
                expected: spec.out_channels,
                found: b.len(),
            })
        }
        (true, None) => {
            return Err(Error::Dimension {
                axis: "bias",
                expected: spec.out_channels,
                found: 0,
            })
        }
        (false, Some(b)) => {
            return Err(Error::Dimension {
                axis: "bias",
                expected: 0,
                found: b.len(),
            })
        }
        _ => {}
    }
    let out_frames = spec
        .output_frames(input.frames)
        .ok_or(Error::Dimension {
            axis: "input frames",
            expected: spec.effective_kernel(),
            found: input.frames,
        })?;

    let in_per_group = spec.in_channels / spec.groups;
    let out_per_group = spec.out_channels / spec.groups;
    let left = (spec.total_padding() / 2) as isize;
    let in_frames = input.frames as isize;
    let stride = spec.stride as isize;

    let mut out = vec![0.0f32; spec.out_channels * out_frames];
    out.par_chunks_mut(out_frames)
        .enumerate()
        .for_each(|(co, out_row)| {
            let mut acc = vec![bias.map_or(0.0, |b| b[co] as f64); out_frames];
            let group = co / out_per_group;
            for ci_local in 0..in_per_group {
                let x = input.row(group * in_per_group + ci_local);
                let taps = &weights[(co * in_per_group + ci_local) * spec.kernel..][..spec.kernel];
                for (k, &w) in taps.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let w = w as f64;
                    let offset = (k * spec.dilation) as isize - left;
                    // valid t satisfy 0 <= t * stride + offset < in_frames
                    let t_lo = if offset < 0 {
                        ((-offset) + stride - 1) / stride
                    } else {
                        0
                    };
                    let t_hi = if in_frames - 1 - offset < 0 {
                        0
                    } else {
                        ((in_frames - 1 - offset) / stride + 1).min(out_frames as isize)
                    };
                    if t_lo >= t_hi {
                        continue;
                    }
                    let (t_lo, t_hi) = (t_lo as usize, t_hi as usize);
                    if stride == 1 {
                        let src = (t_lo as isize + offset) as usize;
                        let xs = &x[src..src + (t_hi - t_lo)];
                        for (a, &v) in acc[t_lo..t_hi].iter_mut().zip(xs) {
                            *a += w * v as f64;
                        }
                    } else {
                        for t in t_lo..t_hi {
                            let src = (t as isize * stride + offset) as usize;
                            acc[t] += w * x[src] as f64;
                        }
                    }
                }
            }
            for (o, a) in out_row.iter_mut().zip(acc) {
                *o = a as f32;
            }
        });
    Tensor2D::new(spec.out_channels, out_frames, out)
}

/// 1x1 convolution, i.e. a per-frame dense projection.
pub fn pointwise_conv(
    input: &Tensor2D,
    out_channels: usize,
    weights: &[f32],
    bias: Option<&[f32]>,
) -> Result<Tensor2D> {
    let spec = ConvSpec::new(input.channels, out_channels, 1).with_bias(bias.is_some());
    conv1d(input, &spec, weights, bias)
}

/// Per-channel dilated convolution with "same" padding.
pub fn depthwise_conv(
    input: &Tensor2D,
    kernel: usize,
    dilation: usize,
    weights: &[f32],
    bias: Option<&[f32]>,
) -> Result<Tensor2D> {
    let c = input.channels;
    let spec = ConvSpec::new(c, c, kernel)
        .with_groups(c)
        .with_dilation(dilation)
        .with_bias(bias.is_some());
    conv1d(input, &spec, weights, bias)
}

/// Transposed convolution from `N x frames` to a single output channel.
///
/// Each frame is projected onto the `N` basis rows of `weights` (`N x kernel`)
/// and the resulting `kernel`-sample segments are overlap-added at `stride`.
/// Output length is `(frames - 1) * stride + kernel`.
pub fn transposed_conv1d(
    input: &Tensor2D,
    kernel: usize,
    stride: usize,
    weights: &[f32],
) -> Result<Tensor2D> {
    if kernel == 0 || stride == 0 {
        return Err(Error::Config("kernel and stride must be positive".into()));
    }
    if stride > kernel {
        return Err(Error::Config(format!(
            "stride {stride} exceeds kernel {kernel}: overlap-add would leave gaps"
        )));
    }
    let n = input.channels;
    if weights.len() != n * kernel {
        return Err(Error::Dimension {
            axis: "weights",
            expected: n * kernel,
            found: weights.len(),
        });
    }
    let frames = input.frames;
    let segments: Vec<Vec<f64>> = (0..frames)
        .into_par_iter()
        .map(|f| {
            let mut seg = vec![0.0f64; kernel];
            for c in 0..n {
                let x = input.get(c, f) as f64;
                if x == 0.0 {
                    continue;
                }
                for (s, &w) in seg.iter_mut().zip(&weights[c * kernel..(c + 1) * kernel]) {
                    *s += x * w as f64;
                }
            }
            seg
        })
        .collect();

    let samples = (frames - 1) * stride + kernel;
    let mut acc = vec![0.0f64; samples];
    for (f, seg) in segments.iter().enumerate() {
        for (a, s) in acc[f * stride..f * stride + kernel].iter_mut().zip(seg) {
            *a += s;
        }
    }
    Tensor2D::new(1, samples, acc.into_iter().map(|v| v as f32).collect())
}

/// Parametric ReLU with one shared slope.
pub fn prelu(input: &Tensor2D, slope: f32) -> Tensor2D {
    let mut out = input.clone();
    prelu_inplace(&mut out, slope);
    out
}

pub fn prelu_inplace(t: &mut Tensor2D, slope: f32) {
    t.map_inplace(|x| if x >= 0.0 { x } else { slope * x });
}

/// Layer normalization with statistics pooled over channels and frames,
/// followed by a per-channel affine transform.
pub fn global_layer_norm(
    input: &Tensor2D,
    gamma: &[f32],
    beta: &[f32],
    eps: f32,
) -> Result<Tensor2D> {
    let mut out = input.clone();
    global_layer_norm_inplace(&mut out, gamma, beta, eps)?;
    Ok(out)
}

pub fn global_layer_norm_inplace(
    t: &mut Tensor2D,
    gamma: &[f32],
    beta: &[f32],
    eps: f32,
) -> Result<()> {
    for (axis, len) in [("gamma", gamma.len()), ("beta", beta.len())] {
        if len != t.channels {
            return Err(Error::Dimension {
                axis,
                expected: t.channels,
                found: len,
            });
        }
    }
    if !(eps > 0.0) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    let count = t.data.len() as f64;
    let mean = t.data.iter().map(|&v| v as f64).sum::<f64>() / count;
    let var = t
        .data
        .iter()
        .map(|&v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / count;
    let inv_std = 1.0 / (var + eps as f64).sqrt();
    let frames = t.frames;
    for (c, row) in t.data.chunks_mut(frames).enumerate() {
        let g = gamma[c] as f64 * inv_std;
        let b = beta[c] as f64;
        for v in row {
            *v = (g * (*v as f64 - mean) + b) as f32;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signal(values: &[f32]) -> Tensor2D {
        Tensor2D::from_signal(values).unwrap()
    }

    #[test]
    fn box_filter_spreads_impulse() {
        let x = signal(&[0., 0., 1., 0., 0.]);
        let spec = ConvSpec::new(1, 1, 3).with_bias(false);
        let y = conv1d(&x, &spec, &[1., 1., 1.], None).unwrap();
        assert_eq!(y.data(), &[0., 1., 1., 1., 0.]);
    }

    #[test]
    fn dilated_box_filter_skips_taps() {
        let x = signal(&[0., 0., 1., 0., 0.]);
        let spec = ConvSpec::new(1, 1, 3).with_bias(false).with_dilation(2);
        let y = conv1d(&x, &spec, &[1., 1., 1.], None).unwrap();
        assert_eq!(y.data(), &[1., 0., 1., 0., 1.]);
    }

    #[test]
    fn conv_rejects_wrong_channel_count() {
        let x = Tensor2D::zeros(3, 8).unwrap();
        let spec = ConvSpec::new(4, 4, 3).with_bias(false);
        let err = conv1d(&x, &spec, &[0.0; 48], None).unwrap_err();
        assert!(err.to_string().contains("input channels"), "{err}");
    }

    #[test]
    fn conv_rejects_wrong_weight_len() {
        let x = Tensor2D::zeros(2, 8).unwrap();
        let spec = ConvSpec::new(2, 2, 3).with_bias(false);
        let err = conv1d(&x, &spec, &[0.0; 5], None).unwrap_err();
        assert!(matches!(err, Error::Dimension { axis: "weights", .. }));
    }

    #[test]
    fn conv_requires_bias_when_flagged() {
        let x = Tensor2D::zeros(1, 4).unwrap();
        let spec = ConvSpec::new(1, 1, 1);
        assert!(conv1d(&x, &spec, &[1.0], None).is_err());
        assert!(conv1d(&x, &spec, &[1.0], Some(&[0.5])).is_ok());
    }

    #[test]
    fn groups_must_divide_channels() {
        let spec = ConvSpec::new(4, 6, 3).with_groups(4);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn strided_valid_conv_frame_count() {
        let spec = ConvSpec::new(1, 4, 16)
            .with_stride(8)
            .with_padding(Padding::Valid)
            .with_bias(false);
        assert_eq!(spec.output_frames(8000), Some(999));
        assert_eq!(spec.output_frames(16), Some(1));
        assert_eq!(spec.output_frames(15), None);
    }

    #[test]
    fn pointwise_identity() {
        let x = Tensor2D::new(3, 4, (0..12).map(|v| v as f32 - 5.0).collect()).unwrap();
        let eye = [1., 0., 0., 0., 1., 0., 0., 0., 1.];
        let y = pointwise_conv(&x, 3, &eye, None).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn pointwise_sums_rows() {
        let x = Tensor2D::new(2, 3, vec![1., 2., 3., 10., 20., 30.]).unwrap();
        let y = pointwise_conv(&x, 1, &[1., 1.], None).unwrap();
        assert_eq!(y.data(), &[11., 22., 33.]);
    }

    #[test]
    fn depthwise_identity_kernel() {
        let x = Tensor2D::new(2, 5, (0..10).map(|v| v as f32).collect()).unwrap();
        let y = depthwise_conv(&x, 3, 1, &[0., 1., 0., 0., 1., 0.], None).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn depthwise_channels_are_independent() {
        let x = Tensor2D::new(2, 4, vec![1., 2., 3., 4., 5., 6., 7., 8.]).unwrap();
        let y = depthwise_conv(&x, 3, 1, &[0., 0., 0., 0., 1., 0.], None).unwrap();
        assert_eq!(y.row(0), &[0.; 4]);
        assert_eq!(y.row(1), x.row(1));
    }

    #[test]
    fn transposed_single_frame_is_kernel() {
        let x = signal(&[1.0]);
        let y = transposed_conv1d(&x, 3, 2, &[1., 2., 3.]).unwrap();
        assert_eq!(y.data(), &[1., 2., 3.]);
    }

    #[test]
    fn transposed_overlap_adds() {
        let x = signal(&[1.0, 1.0]);
        let y = transposed_conv1d(&x, 2, 1, &[1., 1.]).unwrap();
        assert_eq!(y.data(), &[1., 2., 1.]);
    }

    #[test]
    fn transposed_rejects_gapped_stride() {
        let x = signal(&[1.0, 1.0]);
        let err = transposed_conv1d(&x, 2, 3, &[1., 1.]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn prelu_cases() {
        let x = signal(&[-4.0, 2.0]);
        assert_eq!(prelu(&x, 0.25).data(), &[-1.0, 2.0]);
        assert_eq!(prelu(&x, 0.0).data(), &[0.0, 2.0]);
        assert_eq!(prelu(&x, 1.0).data(), x.data());
    }

    #[test]
    fn gln_normalizes_jointly() {
        // mean 5, std 2 across all elements
        let x = Tensor2D::new(2, 2, vec![3., 7., 3., 7.]).unwrap();
        let y = global_layer_norm(&x, &[1., 1.], &[0., 0.], NORM_EPS).unwrap();
        let n = y.data().len() as f64;
        let mean = y.data().iter().map(|&v| v as f64).sum::<f64>() / n;
        let var = y.data().iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-4);
        assert!((var - 1.0).abs() < 1e-3);
    }

    #[test]
    fn gln_zero_gamma_yields_beta() {
        let x = Tensor2D::new(2, 3, vec![1., -2., 3., 4., 5., -6.]).unwrap();
        let y = global_layer_norm(&x, &[0., 0.], &[0.5, -1.5], NORM_EPS).unwrap();
        assert_eq!(y.row(0), &[0.5; 3]);
        assert_eq!(y.row(1), &[-1.5; 3]);
    }

    #[test]
    fn gln_constant_input_yields_beta() {
        let x = Tensor2D::new(2, 3, vec![4.0; 6]).unwrap();
        let y = global_layer_norm(&x, &[2., 3.], &[0.25, 0.75], NORM_EPS).unwrap();
        assert_eq!(y.row(0), &[0.25; 3]);
        assert_eq!(y.row(1), &[0.75; 3]);
    }

    #[test]
    fn tensor_rejects_bad_length() {
        assert!(matches!(
            Tensor2D::new(2, 3, vec![0.0; 5]),
            Err(Error::Dimension { axis: "data", .. })
        ));
    }
}
