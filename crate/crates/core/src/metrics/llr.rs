use super::frames::frame_pairs;
use super::lpc::{autocorrelation, levinson};
use super::{trimmed_low_mean, MetricConfig, MetricError};
use crate::audio::AudioClip;

/// `a·R·aᵀ` for the symmetric Toeplitz matrix built from `r`.
fn toeplitz_form(a: &[f64], r: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (i, ai) in a.iter().enumerate() {
        for (j, aj) in a.iter().enumerate() {
            sum += ai * aj * r[i.abs_diff(j)];
        }
    }
    sum
}

/// Per-frame log-likelihood ratios; frames where either signal is silent
/// are skipped.
pub fn llr_frames(clean: &AudioClip, degraded: &AudioClip, cfg: &MetricConfig) -> Result<Vec<f64>, MetricError> {
    let frames = frame_pairs(clean, degraded, &cfg.frame)?;
    let order = cfg.lpc_order;
    let mut out = Vec::with_capacity(frames.clean.len());
    for (c, d) in frames.clean.iter().zip(&frames.degraded) {
        let r_clean = autocorrelation(c, order);
        let r_deg = autocorrelation(d, order);
        let (Ok(a_clean), Ok(a_deg)) = (levinson(&r_clean, order), levinson(&r_deg, order)) else {
            continue;
        };
        let num = toeplitz_form(&a_deg, &r_clean);
        let den = toeplitz_form(&a_clean, &r_clean);
        if den <= 0.0 {
            continue;
        }
        // The clean predictor minimises the form, so the ratio is ≥ 1 up to rounding.
        out.push((num / den).ln().max(0.0));
    }
    if out.is_empty() {
        return Err(MetricError::AllFramesDegenerate);
    }
    Ok(out)
}

/// Mean LLR over the lowest `keep_fraction` of frames.
pub fn llr(clean: &AudioClip, degraded: &AudioClip, cfg: &MetricConfig) -> Result<f64, MetricError> {
    Ok(trimmed_low_mean(llr_frames(clean, degraded, cfg)?, cfg.keep_fraction))
}
