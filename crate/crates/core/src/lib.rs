//! Scalable Conv-TasNet speech separation.
//!
//! The separator is sized by four knobs: dilated blocks per repeat (`B`),
//! repeats (`R`), depthwise channels (`C`) and the exponential dilation base.
//! Alongside the inference engine the crate provides a closed-form cost model
//! (parameters, MACs, receptive field, memory), a fit planner for embedded
//! targets, SI-SDR evaluation, and the `CTWB` weight / PCM16 WAV formats.

pub mod config;
pub mod costmodel;
pub mod devicefit;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod reference;
pub mod rng;

pub use config::{dilation_schedule, MaskActivation, ScalingConfig};
pub use costmodel::{
    count_macs, count_params, peak_memory, receptive_field, CostOptions, CostReport,
    FlopConvention, MemoryFootprint, QuantBits, ReceptiveField,
};
pub use devicefit::{
    builtin_platforms, check_fit, find_platform, search_configs, ConfigGrid, FitOptions,
    FitVerdict, PlatformSpec,
};
pub use error::{Error, Result};
pub use io::{read_wav, read_weights, write_wav, write_weights, WeightStore, WeightTensor};
pub use metrics::{pit_si_sdr, si_sdr, EvalResult, SiSdr};
pub use model::{build_model, init_random, weight_layout, SeparationModel};
pub use nn::{ConvSpec, Padding, Tensor2D};
pub use reference::{ReferencePoint, ReferenceSource};
