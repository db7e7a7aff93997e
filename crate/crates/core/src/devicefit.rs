//! Embedded platform registry and budget-constrained configuration search.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ScalingConfig;
use crate::costmodel::{count_macs, count_params, peak_memory, QuantBits};
use crate::error::{Error, Result};
use crate::reference;

/// RAM and instruction throughput of a deployment target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlatformSpec {
    pub name: String,
    pub ram_kb: u64,
    pub mips: f64,
}

impl PlatformSpec {
    pub fn new(name: impl Into<String>, ram_kb: u64, mips: f64) -> Result<Self> {
        let name = name.into();
        if ram_kb == 0 {
            return Err(Error::Config(format!("platform `{name}`: ram_kb must be positive")));
        }
        if !(mips > 0.0) || !mips.is_finite() {
            return Err(Error::Config(format!("platform `{name}`: mips must be positive")));
        }
        Ok(Self { name, ram_kb, mips })
    }

    pub fn ram_bytes(&self) -> u64 {
        self.ram_kb * 1024
    }
}

/// The four reference boards, from a Cortex-M4 up to a Raspberry Pi.
pub fn builtin_platforms() -> Vec<PlatformSpec> {
    [
        ("STM32L476RG", 128, 80.0),
        ("TI MSP432P4111", 256, 58.56),
        ("BeagleBone Black", 524_288, 1607.0),
        ("Raspberry Pi 3 B+", 1_048_576, 2800.0),
    ]
    .into_iter()
    .map(|(name, ram_kb, mips)| PlatformSpec {
        name: name.to_string(),
        ram_kb,
        mips,
    })
    .collect()
}

/// Lowercase with everything but ASCII letters and digits removed, so that
/// `raspberrypi3b` matches "Raspberry Pi 3 B+".
pub fn normalize_platform_name(name: &str) -> String {
    name.chars()
        .filter(char::is_ascii_alphanumeric)
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

pub fn find_platform<'a>(platforms: &'a [PlatformSpec], name: &str) -> Option<&'a PlatformSpec> {
    let wanted = normalize_platform_name(name);
    platforms
        .iter()
        .find(|p| normalize_platform_name(&p.name) == wanted)
}

/// Parses a registry file: one `name, ram_kb, mips` per line. Blank lines
/// and lines starting with `#` are ignored; the name may contain spaces but
/// not commas.
pub fn parse_platforms(text: &str) -> Result<Vec<PlatformSpec>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| Error::Config(format!("platform file line {}: {what}", lineno + 1));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [name, ram, mips] = fields[..] else {
            return Err(bad("expected `name, ram_kb, mips`"));
        };
        if name.is_empty() {
            return Err(bad("empty name"));
        }
        let ram_kb = ram.parse().map_err(|_| bad("ram_kb is not an integer"))?;
        let mips = mips.parse().map_err(|_| bad("mips is not a number"))?;
        out.push(PlatformSpec::new(name, ram_kb, mips)?);
    }
    Ok(out)
}

/// Deployment assumptions shared by every fit check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub quant: QuantBits,
    /// Instructions-to-MACs conversion; there is no exact mapping, so this
    /// is an explicit assumption.
    pub mac_per_instruction: f64,
    /// Share of RAM the separator may claim; the rest stays with other services.
    pub ram_fraction: f64,
    /// Audio processed per call, which sizes the activation buffers.
    pub chunk_seconds: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            quant: QuantBits::Float,
            mac_per_instruction: 1.0,
            ram_fraction: 0.75,
            chunk_seconds: 1.0,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.ram_fraction > 0.0 && self.ram_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "ram_fraction must be in (0, 1], got {}",
                self.ram_fraction
            )));
        }
        if !(self.mac_per_instruction > 0.0) || !self.mac_per_instruction.is_finite() {
            return Err(Error::Config(format!(
                "mac_per_instruction must be positive, got {}",
                self.mac_per_instruction
            )));
        }
        if !(self.chunk_seconds > 0.0) {
            return Err(Error::Config("chunk_seconds must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of checking one configuration against one platform.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitVerdict {
    pub config: ScalingConfig,
    pub params: u64,
    pub required_bytes: u64,
    pub macs_per_second: u64,
    pub feasible_memory: bool,
    pub feasible_compute: bool,
    /// Budget minus requirement; negative when over budget.
    pub headroom_ram: i64,
    /// MAC/s budget minus requirement; negative when over budget.
    pub headroom_compute: f64,
    pub reference_si_sdr: Option<f64>,
}

impl FitVerdict {
    pub fn is_feasible(&self) -> bool {
        self.feasible_memory && self.feasible_compute
    }
}

/// Checks memory and compute budgets. Infeasibility is reported in the
/// verdict, not as an error.
pub fn check_fit(
    config: &ScalingConfig,
    platform: &PlatformSpec,
    options: &FitOptions,
) -> Result<FitVerdict> {
    options.validate()?;
    config.validate()?;
    let memory = peak_memory(config, options.quant, options.chunk_seconds)?;
    let macs_per_second = count_macs(config, 1.0)?;
    let ram_budget = (platform.ram_bytes() as f64 * options.ram_fraction).floor() as u64;
    let compute_budget = platform.mips * options.mac_per_instruction * 1e6;
    let required = memory.total();
    Ok(FitVerdict {
        config: *config,
        params: count_params(config),
        required_bytes: required,
        macs_per_second,
        feasible_memory: required <= ram_budget,
        feasible_compute: macs_per_second as f64 <= compute_budget,
        headroom_ram: (ram_budget as i128 - required as i128).clamp(i64::MIN as i128, i64::MAX as i128) as i64,
        headroom_compute: compute_budget - macs_per_second as f64,
        reference_si_sdr: reference::lookup(config.key()).map(|p| p.si_sdr_db),
    })
}

/// Cartesian grid of scaling knobs over a fixed base architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigGrid {
    pub blocks: Vec<u32>,
    pub repeats: Vec<u32>,
    pub channels: Vec<usize>,
    pub bases: Vec<u64>,
    /// Supplies every non-knob hyperparameter.
    pub template: ScalingConfig,
}

impl ConfigGrid {
    /// B in {2,4,6,8}, R in {1,2,3}, C in {64,128,512}, base 2.
    pub fn reduction_sweep() -> Self {
        Self {
            blocks: vec![2, 4, 6, 8],
            repeats: vec![1, 2, 3],
            channels: vec![64, 128, 512],
            bases: vec![2],
            template: ScalingConfig::baseline(),
        }
    }

    /// B in {2,4}, R = 3, C in {64,128,512}, bases {2,4,8}.
    pub fn dilation_sweep() -> Self {
        Self {
            blocks: vec![2, 4],
            repeats: vec![3],
            channels: vec![64, 128, 512],
            bases: vec![2, 4, 8],
            template: ScalingConfig::baseline(),
        }
    }

    pub fn single(config: ScalingConfig) -> Self {
        Self {
            blocks: vec![config.num_blocks],
            repeats: vec![config.num_repeats],
            channels: vec![config.depthwise_channels],
            bases: vec![config.dilation_base],
            template: config,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
            || self.repeats.is_empty()
            || self.channels.is_empty()
            || self.bases.is_empty()
    }

    /// All grid points in lexicographic `(B, R, C, base)` order, values
    /// sorted and deduplicated per axis.
    pub fn configs(&self) -> Vec<ScalingConfig> {
        fn axis<T: Ord + Copy>(v: &[T]) -> Vec<T> {
            let mut v = v.to_vec();
            v.sort_unstable();
            v.dedup();
            v
        }
        let mut out = Vec::new();
        for &b in &axis(&self.blocks) {
            for &r in &axis(&self.repeats) {
                for &c in &axis(&self.channels) {
                    for &base in &axis(&self.bases) {
                        out.push(ScalingConfig {
                            num_blocks: b,
                            num_repeats: r,
                            depthwise_channels: c,
                            dilation_base: base,
                            ..self.template
                        });
                    }
                }
            }
        }
        out
    }
}

/// Ranking order: configurations with a measured SI-SDR first, best first;
/// then the rest by parameter count, largest first; ties broken by
/// ascending `(B, R, C, base)`.
pub fn rank_order(a: &FitVerdict, b: &FitVerdict) -> Ordering {
    let primary = match (a.reference_si_sdr, b.reference_si_sdr) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => b.params.cmp(&a.params),
    };
    primary.then_with(|| a.config.key().cmp(&b.config.key()))
}

/// Feasible configurations of `grid` on `platform`, ranked by [`rank_order`].
pub fn search_configs(
    platform: &PlatformSpec,
    grid: &ConfigGrid,
    options: &FitOptions,
) -> Result<Vec<FitVerdict>> {
    if grid.is_empty() {
        return Err(Error::Config("configuration grid is empty".into()));
    }
    options.validate()?;
    let verdicts = grid
        .configs()
        .par_iter()
        .map(|cfg| check_fit(cfg, platform, options))
        .collect::<Result<Vec<_>>>()?;
    let mut feasible: Vec<_> = verdicts.into_iter().filter(FitVerdict::is_feasible).collect();
    feasible.sort_by(rank_order);
    Ok(feasible)
}
