//! Mono 16-bit PCM WAV reading and writing.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

/// Full-scale divisor: sample `i` maps to `i / 32768`.
const FULL_SCALE: f32 = 32768.0;

/// Reads a mono PCM16 file, returning samples in `[-1, 1)` and the rate.
pub fn read_wav(path: impl AsRef<Path>) -> Result<(Vec<f32>, u32)> {
    let reader = WavReader::open(path)?;
    let spec = reader.spec();
    if spec.sample_format != SampleFormat::Int {
        return Err(Error::UnsupportedWav {
            property: "sample format",
            detail: "floating point, expected integer PCM".into(),
        });
    }
    if spec.channels != 1 {
        return Err(Error::UnsupportedWav {
            property: "channel count",
            detail: format!("{} channels, expected mono", spec.channels),
        });
    }
    if spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedWav {
            property: "bit depth",
            detail: format!("{} bits, expected 16", spec.bits_per_sample),
        });
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f32 / FULL_SCALE))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((samples, spec.sample_rate))
}

/// Quantizes `sample` to int16: clamp to `[-1, 1]`, scale by 32768, round
/// half away from zero, saturate at `i16::MAX`.
pub fn quantize_pcm16(sample: f32) -> i16 {
    let scaled = (sample.clamp(-1.0, 1.0) * FULL_SCALE).round();
    scaled.clamp(i16::MIN as f32, i16::MAX as f32) as i16
}

/// Writes `samples` as mono PCM16 with the canonical 44-byte header.
pub fn write_wav(path: impl AsRef<Path>, samples: &[f32], sample_rate: u32) -> Result<()> {
    if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
        return Err(Error::Config(format!("non-finite sample at index {i}")));
    }
    let spec = WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec)?;
    {
        let mut w = writer.get_i16_writer(samples.len() as u32);
        for &s in samples {
            w.write_sample(quantize_pcm16(s));
        }
        w.flush()?;
    }
    writer.finalize()?;
    Ok(())
}
