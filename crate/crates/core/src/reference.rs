//! Published measurements shipped as read-only metadata.
//!
//! SI-SDR values come from trained models and cannot be recomputed here; they
//! annotate cost-model output and rank device-fit candidates.

use serde::Serialize;

/// Which published sweep a measurement belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSource {
    /// The (B, R, C) reduction sweep at dilation base 2.
    ScalingSweep,
    /// The small-model sweep over dilation bases 2, 4 and 8.
    DilationSweep,
}

/// One measured separation quality for a `(B, R, C, base)` configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferencePoint {
    pub num_blocks: u32,
    pub num_repeats: u32,
    pub depthwise_channels: usize,
    pub dilation_base: u64,
    /// Parameter count in thousands as printed.
    pub params_k: u64,
    pub si_sdr_db: f64,
    pub source: ReferenceSource,
}

impl ReferencePoint {
    pub fn key(&self) -> (u32, u32, usize, u64) {
        (
            self.num_blocks,
            self.num_repeats,
            self.depthwise_channels,
            self.dilation_base,
        )
    }
}

const fn point(
    b: u32,
    r: u32,
    c: usize,
    base: u64,
    params_k: u64,
    si_sdr_db: f64,
    source: ReferenceSource,
) -> ReferencePoint {
    ReferencePoint {
        num_blocks: b,
        num_repeats: r,
        depthwise_channels: c,
        dilation_base: base,
        params_k,
        si_sdr_db,
        source,
    }
}

use ReferenceSource::{DilationSweep as D, ScalingSweep as S};

/// All 24 rows of the reduction sweep, in published order.
pub const SCALING_SWEEP: [ReferencePoint; 24] = [
    point(8, 3, 512, 2, 5100, 12.52, S),
    point(6, 3, 512, 2, 3800, 12.80, S),
    point(6, 2, 512, 2, 2600, 12.02, S),
    point(4, 3, 512, 2, 2600, 11.28, S),
    point(8, 1, 512, 2, 1800, 10.36, S),
    point(4, 2, 512, 2, 1800, 10.56, S),
    point(8, 3, 128, 2, 1400, 11.92, S),
    point(6, 1, 512, 2, 1400, 9.77, S),
    point(2, 3, 512, 2, 1400, 8.62, S),
    point(6, 3, 128, 2, 1100, 11.07, S),
    point(2, 2, 512, 2, 1000, 7.41, S),
    point(6, 3, 64, 2, 972, 10.28, S),
    point(8, 3, 64, 2, 825, 10.26, S),
    point(6, 2, 128, 2, 821, 10.27, S),
    point(4, 3, 128, 2, 821, 9.93, S),
    point(8, 1, 128, 2, 619, 9.24, S),
    point(6, 2, 64, 2, 520, 9.18, S),
    point(4, 3, 64, 2, 520, 8.85, S),
    point(2, 3, 128, 2, 518, 7.50, S),
    point(8, 1, 64, 2, 418, 8.31, S),
    point(2, 2, 128, 2, 417, 6.49, S),
    point(6, 1, 64, 2, 367, 7.64, S),
    point(2, 3, 64, 2, 367, 6.77, S),
    point(2, 2, 64, 2, 316, 5.90, S),
];

/// Baseline plus the six small models at bases 2, 4 and 8.
pub const DILATION_SWEEP: [ReferencePoint; 19] = [
    point(8, 3, 512, 2, 5100, 12.52, D),
    point(4, 3, 512, 2, 2600, 11.28, D),
    point(4, 3, 512, 4, 2600, 12.02, D),
    point(4, 3, 512, 8, 2600, 11.10, D),
    point(4, 3, 128, 2, 821, 9.90, D),
    point(4, 3, 128, 4, 821, 10.17, D),
    point(4, 3, 128, 8, 821, 9.66, D),
    point(4, 3, 64, 2, 520, 8.85, D),
    point(4, 3, 64, 4, 520, 9.21, D),
    point(4, 3, 64, 8, 520, 8.51, D),
    point(2, 3, 512, 2, 1400, 8.62, D),
    point(2, 3, 512, 4, 1400, 8.94, D),
    point(2, 3, 512, 8, 1400, 9.44, D),
    point(2, 3, 128, 2, 518, 7.50, D),
    point(2, 3, 128, 4, 518, 7.83, D),
    point(2, 3, 128, 8, 518, 8.02, D),
    point(2, 3, 64, 2, 367, 6.77, D),
    point(2, 3, 64, 4, 367, 7.09, D),
    point(2, 3, 64, 8, 367, 7.26, D),
];

/// Every shipped reference point, reduction sweep first.
pub fn reference_points() -> impl Iterator<Item = &'static ReferencePoint> {
    SCALING_SWEEP.iter().chain(DILATION_SWEEP.iter())
}

/// Measured SI-SDR for a configuration key. Where both sweeps list the same
/// key the reduction sweep wins.
pub fn lookup(key: (u32, u32, usize, u64)) -> Option<&'static ReferencePoint> {
    reference_points().find(|p| p.key() == key)
}

/// Other published separators, for context only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PublishedModel {
    pub name: &'static str,
    pub params_m: f64,
    /// GFLOPs per second of input audio; `None` when not published.
    pub gflops: Option<f64>,
    /// SI-SDR on the same two-speaker task, where reported.
    pub si_sdr_db: Option<f64>,
}

pub const PUBLISHED_MODELS: [PublishedModel; 4] = [
    PublishedModel {
        name: "Two-Step TDCN",
        params_m: 8.63,
        gflops: Some(7.09),
        si_sdr_db: None,
    },
    PublishedModel {
        name: "Conv-TasNet",
        params_m: 5.10,
        gflops: Some(5.23),
        si_sdr_db: Some(12.52),
    },
    PublishedModel {
        name: "Dual-Path-RNN",
        params_m: 2.63,
        gflops: Some(48.89),
        si_sdr_db: None,
    },
    PublishedModel {
        name: "SuDoRM-RF",
        params_m: 2.66,
        gflops: Some(2.52),
        si_sdr_db: Some(13.13),
    },
];
