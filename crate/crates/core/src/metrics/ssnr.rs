use super::frames::frame_pairs;
use super::{MetricConfig, MetricError};
use crate::audio::AudioClip;

pub const SSNR_FLOOR_DB: f64 = -10.0;
pub const SSNR_CEILING_DB: f64 = 35.0;

/// Per-frame `10·log10(Σ clean² / Σ (clean − degraded)²)`.
///
/// In clipped mode each frame is limited to `[-10, 35]` dB and an error-free
/// frame scores the ceiling. Unclipped mode regularises with machine epsilon
/// instead.
pub fn segmental_snr_frames(clean: &AudioClip, degraded: &AudioClip, cfg: &MetricConfig) -> Result<Vec<f64>, MetricError> {
    let frames = frame_pairs(clean, degraded, &cfg.frame)?;
    Ok(frames
        .clean
        .iter()
        .zip(&frames.degraded)
        .map(|(c, d)| {
            let signal: f64 = c.iter().map(|v| v * v).sum();
            let noise: f64 = c.iter().zip(d).map(|(a, b)| (a - b) * (a - b)).sum();
            if cfg.ssnr_clipped {
                if noise == 0.0 {
                    SSNR_CEILING_DB
                } else {
                    (10.0 * (signal / noise).log10()).clamp(SSNR_FLOOR_DB, SSNR_CEILING_DB)
                }
            } else {
                10.0 * (signal / (noise + f64::EPSILON) + f64::EPSILON).log10()
            }
        })
        .collect())
}

/// Mean of [`segmental_snr_frames`].
pub fn segmental_snr(clean: &AudioClip, degraded: &AudioClip, cfg: &MetricConfig) -> Result<f64, MetricError> {
    let frames = segmental_snr_frames(clean, degraded, cfg)?;
    Ok(frames.iter().sum::<f64>() / frames.len() as f64)
}
