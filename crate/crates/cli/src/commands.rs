use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use tasnet_core::costmodel::{CostOptions, CostReport};
use tasnet_core::devicefit::{builtin_platforms, find_platform, parse_platforms};
use tasnet_core::io::{load_weights, save_weights};
use tasnet_core::model::infer_config;
use tasnet_core::reference;
use tasnet_core::{
    build_model, init_random, pit_si_sdr, read_wav, search_configs, weight_layout, write_wav,
    ConfigGrid, Error, FitOptions, PlatformSpec, ScalingConfig, SiSdr,
};

use crate::args::{
    AnalyzeArgs, EvalArgs, FitArgs, GridArgs, InitRandomArgs, SeparateArgs, SweepArgs,
};

pub const SWEEP_HEADER: [&str; 9] = [
    "B", "R", "C", "dil_base", "params_k", "gflops_s", "rf_ms", "model_bytes", "ref_si_sdr_db",
];

#[derive(Debug)]
pub enum CliError {
    /// Bad flag values; exit code 2.
    Usage(String),
    /// Bad data or failed I/O; exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) | Self::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn usage(e: Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn validated(cfg: ScalingConfig) -> CliResult<ScalingConfig> {
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn grid(args: &GridArgs) -> CliResult<ConfigGrid> {
    let grid = ConfigGrid {
        blocks: args.blocks.clone(),
        repeats: args.repeats.clone(),
        channels: args.channels.clone(),
        bases: args.bases.clone(),
        template: args.base.template(),
    };
    if grid.is_empty() {
        return Err(CliError::Usage("grid lists must not be empty".into()));
    }
    for cfg in grid.configs() {
        validated(cfg)?;
    }
    Ok(grid)
}

fn reference_db(cfg: &ScalingConfig) -> Option<f64> {
    reference::lookup(cfg.key()).map(|p| p.si_sdr_db)
}

pub fn analyze(args: &AnalyzeArgs, out: &mut impl Write) -> CliResult {
    let cfg = validated(args.arch.config())?;
    if args.dump_names {
        for slot in weight_layout(&cfg) {
            writeln!(out, "{} {:?}", slot.name, slot.shape)?;
        }
        return Ok(());
    }
    let options = CostOptions {
        quant: args.quant_bits,
        chunk_seconds: args.chunk_seconds,
        flops: args.flops.into(),
    };
    if !(options.chunk_seconds > 0.0) {
        return Err(CliError::Usage("--chunk-seconds must be positive".into()));
    }
    let report = CostReport::compute(&cfg, &options)?;
    let value = serde_json::to_value(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&value).unwrap())?;
    } else {
        let serde_json::Value::Object(fields) = value else {
            unreachable!("report serializes to an object")
        };
        for (key, v) in fields {
            writeln!(out, "{key}: {v}")?;
        }
    }
    Ok(())
}

pub fn sweep(args: &SweepArgs, stdout: &mut impl Write) -> CliResult {
    let grid = grid(&args.grid)?;
    let options = CostOptions {
        quant: args.quant_bits,
        ..CostOptions::default()
    };
    let dest: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(
            fs::File::create(path)
                .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?,
        ),
        None => Box::new(&mut *stdout),
    };
    let mut writer = csv::Writer::from_writer(dest);
    let csv_err = |e: csv::Error| CliError::Runtime(e.to_string());
    writer.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for cfg in grid.configs() {
        let r = CostReport::compute(&cfg, &options)?;
        writer
            .write_record([
                cfg.num_blocks.to_string(),
                cfg.num_repeats.to_string(),
                cfg.depthwise_channels.to_string(),
                cfg.dilation_base.to_string(),
                r.params_k.to_string(),
                format!("{:.4}", r.gflops_per_second),
                format!("{:.3}", r.receptive_field_ms),
                r.model_bytes.to_string(),
                reference_db(&cfg).map(|v| format!("{v:.2}")).unwrap_or_default(),
            ])
            .map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

fn resolve_platform(args: &FitArgs) -> CliResult<PlatformSpec> {
    let mut registry = builtin_platforms();
    if let Some(path) = &args.platforms_file {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
        registry.extend(parse_platforms(&text)?);
    }
    match (&args.platform, args.ram_kb, args.mips) {
        (Some(name), _, _) => find_platform(&registry, name).cloned().ok_or_else(|| {
            let known: Vec<_> = registry.iter().map(|p| p.name.as_str()).collect();
            CliError::Usage(format!(
                "unknown platform `{name}`; known platforms: {}",
                known.join(", ")
            ))
        }),
        (None, Some(ram_kb), Some(mips)) => PlatformSpec::new("custom", ram_kb, mips).map_err(usage),
        _ => Err(CliError::Usage(
            "give either --platform or both --ram-kb and --mips".into(),
        )),
    }
}

pub fn fit(args: &FitArgs, out: &mut impl Write) -> CliResult {
    let platform = resolve_platform(args)?;
    let grid = grid(&args.grid)?;
    let options = FitOptions {
        quant: args.quant_bits,
        mac_per_instruction: args.mac_per_instr,
        ram_fraction: args.ram_fraction,
        chunk_seconds: args.chunk_seconds,
    };
    options.validate().map_err(usage)?;
    writeln!(
        out,
        "platform: {} ({} KB RAM, {} MIPS), {}-bit weights",
        platform.name,
        platform.ram_kb,
        platform.mips,
        options.quant.bits()
    )?;
    let ranked = search_configs(&platform, &grid, &options)?;
    if ranked.is_empty() {
        writeln!(out, "no feasible configuration")?;
        return Ok(());
    }
    writeln!(
        out,
        "{:>4} {:>3} {:>2} {:>4} {:>8} {:>9} {:>9} {:>12} {:>14} {:>10}",
        "rank", "B", "R", "C", "dil_base", "params_k", "gmac_s", "required_kb", "ram_headroom_kb", "ref_sdr_db"
    )?;
    for (i, v) in ranked.iter().enumerate() {
        let c = &v.config;
        writeln!(
            out,
            "{:>4} {:>3} {:>2} {:>4} {:>8} {:>9} {:>9.3} {:>12} {:>14} {:>10}",
            i + 1,
            c.num_blocks,
            c.num_repeats,
            c.depthwise_channels,
            c.dilation_base,
            tasnet_core::costmodel::params_k(v.params),
            v.macs_per_second as f64 / 1e9,
            v.required_bytes.div_ceil(1024),
            v.headroom_ram / 1024,
            v.reference_si_sdr.map(|d| format!("{d:.2}")).unwrap_or_else(|| "-".into()),
        )?;
    }
    Ok(())
}

pub fn separate(args: &SeparateArgs, out: &mut impl Write) -> CliResult {
    let store = load_weights(&args.model)?;
    let template = ScalingConfig {
        dilation_base: args.dil_base,
        encoder_stride: args.stride,
        sample_rate: args.sample_rate,
        mask_activation: args.mask_activation,
        ..ScalingConfig::baseline()
    };
    let cfg = infer_config(&store, &template)?;
    let model = build_model(&cfg, &store)?;
    let (audio, rate) = read_wav(&args.input)?;
    if rate != cfg.sample_rate {
        return Err(CliError::Runtime(format!(
            "{} is sampled at {rate} Hz but the model expects {} Hz",
            args.input.display(),
            cfg.sample_rate
        )));
    }
    let sources = model.separate(&audio)?;
    for (k, source) in sources.iter().enumerate() {
        let path = PathBuf::from(format!("{}_src{}.wav", args.output_prefix, k + 1));
        write_wav(&path, source, rate)?;
        writeln!(out, "wrote {} ({} samples)", path.display(), source.len())?;
    }
    Ok(())
}

fn render_db(v: SiSdr, cap: Option<f64>) -> String {
    match cap {
        Some(cap) => format!("{:.2}", v.capped(cap)),
        None => format!("{v:.2}"),
    }
}

pub fn eval(args: &EvalArgs, out: &mut impl Write) -> CliResult {
    if args.est.len() != args.refs.len() {
        return Err(CliError::Usage(format!(
            "{} estimates but {} references",
            args.est.len(),
            args.refs.len()
        )));
    }
    let load = |paths: &[PathBuf]| -> CliResult<Vec<Vec<f32>>> {
        paths.iter().map(|p| Ok(read_wav(p)?.0)).collect()
    };
    let ests = load(&args.est)?;
    let refs = load(&args.refs)?;
    let result = pit_si_sdr(&ests, &refs)?;
    for (i, v) in result.per_source_si_sdr.iter().enumerate() {
        writeln!(
            out,
            "source {}: {} dB (estimate {})",
            i + 1,
            render_db(*v, args.cap_db),
            args.est[result.best_permutation[i]].display()
        )?;
    }
    writeln!(out, "mean: {} dB", render_db(result.mean_si_sdr, args.cap_db))?;
    Ok(())
}

pub fn init_random_cmd(args: &InitRandomArgs, out: &mut impl Write) -> CliResult {
    let cfg = validated(args.arch.config())?;
    let store = init_random(&cfg, args.seed)?;
    let bytes = save_weights(&store, &args.out)?;
    writeln!(
        out,
        "wrote {} ({} tensors, {} parameters, {bytes} bytes)",
        args.out.display(),
        store.len(),
        store.scalar_count()
    )?;
    Ok(())
}
