//! Objective speech-quality measures.
//!
//! Segmental SNR, LLR and WSS follow the framing conventions of the
//! classic composite-measure toolbox (30 ms Hanning frames, 75 % overlap,
//! lowest-95 %-of-frames averaging for LLR and WSS). PESQ is delegated to an
//! external program; the CSIG/CBAK/COVL regressions need it and are absent
//! without it.

mod composite;
mod corpus;
mod frames;
mod lpc;
mod llr;
mod pesq;
mod ssnr;
mod wss;

pub use composite::{composite_measures, composite_raw, Composite};
pub use corpus::{evaluate_corpus, write_report_csv, CorpusEvaluation, EvalPair, UtteranceMetrics};
pub use frames::{FrameSpec, Window};
pub use llr::{llr, llr_frames};
pub use lpc::{autocorrelation, levinson, lpc_coefficients};
pub use pesq::{pesq_external, PesqAdapter};
pub use ssnr::{segmental_snr, segmental_snr_frames};
pub use wss::{wss, wss_frames};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("signals share no full {frame_len}-sample frame (lengths {clean} and {degraded})")]
    TooShort { clean: usize, degraded: usize, frame_len: usize },
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    RateMismatch(u32, u32),
    #[error("reference signal is all zeros")]
    SilentReference,
    #[error("degenerate frame: zero autocorrelation energy")]
    DegenerateFrame,
    #[error("every frame is degenerate")]
    AllFramesDegenerate,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("PESQ adapter output not parseable: {output:?}")]
    PesqParse { output: String },
    #[error("PESQ adapter returned {value}, outside [-0.5, 4.5]")]
    PesqRange { value: f64 },
    #[error("PESQ adapter failed ({status}): {stderr}")]
    PesqFailed { status: String, stderr: String },
    #[error("no utterance could be evaluated")]
    NothingEvaluated,
    #[error(transparent)]
    Audio(#[from] crate::audio::AudioError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Knobs shared by the frame-based measures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub frame: FrameSpec,
    pub lpc_order: usize,
    /// Clip per-frame segmental SNR to `[-10, 35]` dB.
    pub ssnr_clipped: bool,
    /// Fraction of lowest-distortion frames averaged by LLR and WSS.
    pub keep_fraction: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { frame: FrameSpec::default(), lpc_order: 10, ssnr_clipped: true, keep_fraction: 0.95 }
    }
}

/// Aggregate quality of a set of (clean, degraded) pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub pesq: Option<f64>,
    pub csig: Option<f64>,
    pub cbak: Option<f64>,
    pub covl: Option<f64>,
    pub ssnr: f64,
    pub llr: f64,
    pub wss: f64,
    pub n_utterances: usize,
}

/// Metric names in report/CSV order.
pub const METRIC_NAMES: [&str; 7] = ["pesq", "csig", "cbak", "covl", "ssnr", "llr", "wss"];

impl MetricsReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "pesq" => self.pesq,
            "csig" => self.csig,
            "cbak" => self.cbak,
            "covl" => self.covl,
            "ssnr" => Some(self.ssnr),
            "llr" => Some(self.llr),
            "wss" => Some(self.wss),
            _ => None,
        }
    }
}

/// Mean of the lowest `keep_fraction` of `values` (at least one).
pub(crate) fn trimmed_low_mean(mut values: Vec<f64>, keep_fraction: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let keep = ((values.len() as f64 * keep_fraction).round() as usize).clamp(1, values.len());
    values[..keep].iter().sum::<f64>() / keep as f64
}
