//! External file formats: `CTWB` weight files and PCM16 WAV.

mod wav;
mod weights;

pub use wav::{quantize_pcm16, read_wav, write_wav};
pub use weights::{
    load_weights, read_weights, save_weights, write_weights, WeightStore, WeightTensor,
    FORMAT_VERSION, MAGIC,
};
