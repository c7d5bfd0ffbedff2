//! Waveform containers, WAV I/O, preemphasis, chunking and SNR-controlled
//! mixing.

mod chunk;
mod clip;
mod grid;
mod manifest;
mod mix;
mod wav;

pub use chunk::{chunk_signal, reconstruct, Chunk};
pub use clip::{AudioClip, NoiseCondition, SAMPLE_RATE};
pub use grid::{conditions, mix_grid, GridOutput};
pub use manifest::{read_manifest, write_manifest, ManifestRow};
pub use mix::{measured_snr_db, mix_at_snr, Mixture};
pub use wav::{load_wav, write_wav};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("{path}: unsupported sample rate {rate} Hz (expected {SAMPLE_RATE} Hz)")]
    SampleRate { path: PathBuf, rate: u32 },
    #[error("{0}: empty clip")]
    EmptyClip(String),
    #[error("{path}: unsupported WAV encoding: {detail}")]
    UnsupportedCodec { path: PathBuf, detail: String },
    #[error("{path}: malformed WAV: {source}")]
    Malformed { path: PathBuf, source: hound::Error },
    #[error("degenerate input: {0} has zero power")]
    Silent(&'static str),
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    RateMismatch(u32, u32),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("manifest {path}, line {line}: {detail}")]
    Manifest { path: PathBuf, line: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
