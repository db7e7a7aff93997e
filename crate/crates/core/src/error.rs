use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the engine.
#[derive(Debug, Error)]
pub enum Error {
    /// A tensor or buffer had the wrong extent along a named axis.
    #[error("dimension mismatch on {axis}: expected {expected}, found {found}")]
    Dimension {
        axis: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A weight tensor required by the architecture is missing or mis-shaped.
    #[error("failed to load tensor `{tensor}`: {reason}")]
    Load { tensor: String, reason: String },

    #[error("input too short: {len} samples, need at least {min}")]
    InputTooShort { len: usize, min: usize },

    #[error("SI-SDR undefined: reference signal is all zeros")]
    UndefinedReference,

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("bad magic bytes {found:?}, expected \"CTWB\"")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported weight file version {0}")]
    UnsupportedVersion(u32),

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("weight file truncated while reading {0}")]
    Truncated(&'static str),

    #[error("malformed weight file: {0}")]
    Malformed(String),

    /// WAV input that is not mono 16-bit integer PCM.
    #[error("unsupported WAV {property}: {detail}")]
    UnsupportedWav {
        property: &'static str,
        detail: String,
    },

    #[error(transparent)]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}
