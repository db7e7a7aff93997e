//! Brute-force reference implementations used by the integration tests.
//! Nothing here calls into the kernels it checks.

#![allow(dead_code)]

use tasnet_core::rng::SplitMix64;
use tasnet_core::ScalingConfig;

pub fn random_vec(rng: &mut SplitMix64, len: usize, scale: f64) -> Vec<f32> {
    (0..len).map(|_| rng.uniform(scale)).collect()
}

/// Direct convolution straight from the definition, padded input built
/// explicitly. `x` is `c_in x n`, `w` is `c_out x (c_in/groups) x k`.
#[allow(clippy::too_many_arguments)]
pub fn naive_conv1d(
    x: &[f32],
    c_in: usize,
    n: usize,
    w: &[f32],
    bias: Option<&[f32]>,
    c_out: usize,
    k: usize,
    dilation: usize,
    stride: usize,
    groups: usize,
    same_padding: bool,
) -> (Vec<f64>, usize) {
    let total_pad = if same_padding { dilation * (k - 1) } else { 0 };
    let left = total_pad / 2;
    let padded_len = n + total_pad;
    let mut padded = vec![0.0f64; c_in * padded_len];
    for c in 0..c_in {
        for t in 0..n {
            padded[c * padded_len + left + t] = x[c * n + t] as f64;
        }
    }
    let span = dilation * (k - 1) + 1;
    let out_frames = (padded_len - span) / stride + 1;
    let cin_g = c_in / groups;
    let cout_g = c_out / groups;
    let mut out = vec![0.0f64; c_out * out_frames];
    for co in 0..c_out {
        let g = co / cout_g;
        for t in 0..out_frames {
            let mut acc = bias.map_or(0.0, |b| b[co] as f64);
            for ci in 0..cin_g {
                let cin = g * cin_g + ci;
                for kk in 0..k {
                    let wv = w[(co * cin_g + ci) * k + kk] as f64;
                    acc += wv * padded[cin * padded_len + t * stride + kk * dilation];
                }
            }
            out[co * out_frames + t] = acc;
        }
    }
    (out, out_frames)
}

/// `W (c_out x c_in) * X (c_in x n) + b`.
pub fn naive_matmul(x: &[f32], c_in: usize, n: usize, w: &[f32], bias: &[f32], c_out: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; c_out * n];
    for i in 0..c_out {
        for j in 0..n {
            let mut acc = bias[i] as f64;
            for p in 0..c_in {
                acc += w[i * c_in + p] as f64 * x[p * n + j] as f64;
            }
            out[i * n + j] = acc;
        }
    }
    out
}

/// Sum over frames of each frame's basis combination, shifted by `stride`.
pub fn naive_overlap_add(x: &[f32], c: usize, frames: usize, w: &[f32], kernel: usize, stride: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; (frames - 1) * stride + kernel];
    for f in 0..frames {
        for ch in 0..c {
            for l in 0..kernel {
                out[f * stride + l] += x[ch * frames + f] as f64 * w[ch * kernel + l] as f64;
            }
        }
    }
    out
}

/// Two-pass global layer norm.
pub fn naive_gln(x: &[f32], c: usize, n: usize, gamma: &[f32], beta: &[f32], eps: f64) -> Vec<f64> {
    let count = (c * n) as f64;
    let mut mean = 0.0;
    for &v in x {
        mean += v as f64;
    }
    mean /= count;
    let mut var = 0.0;
    for &v in x {
        var += (v as f64 - mean) * (v as f64 - mean);
    }
    var /= count;
    let mut out = vec![0.0; c * n];
    for ch in 0..c {
        for t in 0..n {
            out[ch * n + t] =
                gamma[ch] as f64 * (x[ch * n + t] as f64 - mean) / (var + eps).sqrt() + beta[ch] as f64;
        }
    }
    out
}

pub fn max_rel_err(got: &[f32], want: &[f64]) -> f64 {
    assert_eq!(got.len(), want.len());
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-30);
    got.iter()
        .zip(want)
        .map(|(&g, &w)| (g as f64 - w).abs() / scale)
        .fold(0.0, f64::max)
}

/// Support of the separator's response to a unit impulse, measured on a
/// linear ablation: one channel, all-ones depthwise kernels, no norms or
/// activations, residual and skip paths kept. Returns `(frames, samples)`.
pub fn impulse_probe_receptive_field(config: &ScalingConfig) -> (u64, u64) {
    let p = config.conv_kernel;
    let mut dilations = Vec::new();
    for _ in 0..config.num_repeats {
        let mut d = 1usize;
        for _ in 0..config.num_blocks {
            dilations.push(d);
            d *= config.dilation_base as usize;
        }
    }
    let reach: usize = dilations.iter().map(|d| d * (p - 1)).sum();
    let len = 2 * reach + 3;
    let centre = reach + 1;

    let mut x = vec![0.0f64; len];
    x[centre] = 1.0;
    let mut skip = vec![0.0f64; len];
    for &d in &dilations {
        let left = d * (p - 1) / 2;
        let mut h = vec![0.0f64; len];
        for t in 0..len {
            for k in 0..p {
                let src = t as isize + (k * d) as isize - left as isize;
                if src >= 0 && (src as usize) < len {
                    h[t] += x[src as usize];
                }
            }
        }
        for t in 0..len {
            x[t] += h[t];
            skip[t] += h[t];
        }
    }
    let nz: Vec<usize> = (0..len).filter(|&t| skip[t] != 0.0).collect();
    let frames = (nz.last().unwrap() - nz.first().unwrap() + 1) as u64;

    // Map the frame span to input samples through the encoder geometry.
    let stride = config.encoder_stride;
    let kernel = config.encoder_kernel;
    let mut covered = vec![false; (frames as usize - 1) * stride + kernel + stride];
    for f in 0..frames as usize {
        for s in 0..kernel {
            covered[f * stride + s] = true;
        }
    }
    let samples = covered.iter().filter(|&&c| c).count() as u64;
    (frames, samples)
}

/// SI-SDR straight from the formula, for cross-checking.
pub fn direct_si_sdr(est: &[f64], reference: &[f64]) -> f64 {
    let dot: f64 = est.iter().zip(reference).map(|(a, b)| a * b).sum();
    let energy: f64 = reference.iter().map(|v| v * v).sum();
    let alpha = dot / energy;
    let target: Vec<f64> = reference.iter().map(|r| alpha * r).collect();
    let num: f64 = target.iter().map(|v| v * v).sum();
    let den: f64 = target.iter().zip(est).map(|(t, e)| (t - e) * (t - e)).sum();
    10.0 * (num / den).log10()
}
