use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::audio::AudioClip;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hanning,
    Rectangular,
}

/// Analysis framing: `frame_ms` windows advanced by `1 − overlap_fraction`
/// of a frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub frame_ms: f64,
    pub overlap_fraction: f64,
    pub window: Window,
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self { frame_ms: 30.0, overlap_fraction: 0.75, window: Window::Hanning }
    }
}

impl FrameSpec {
    pub fn frame_len(&self, sample_rate: u32) -> usize {
        (self.frame_ms * sample_rate as f64 / 1000.0).round() as usize
    }

    pub fn hop(&self, sample_rate: u32) -> usize {
        let len = self.frame_len(sample_rate) as f64;
        ((len * (1.0 - self.overlap_fraction)).round() as usize).max(1)
    }

    /// `0.5·(1 − cos(2πn/(L+1)))` for `n = 1..=L`, the toolbox's Hanning
    /// variant with no zero endpoints.
    pub fn window_coefficients(&self, len: usize) -> Vec<f64> {
        match self.window {
            Window::Hanning => (1..=len)
                .map(|n| 0.5 * (1.0 - (std::f64::consts::TAU * n as f64 / (len as f64 + 1.0)).cos()))
                .collect(),
            Window::Rectangular => vec![1.0; len],
        }
    }
}

/// Windowed, aligned frame pairs over the common prefix of two clips.
pub(crate) struct FramePairs {
    pub clean: Vec<Vec<f64>>,
    pub degraded: Vec<Vec<f64>>,
}

pub(crate) fn frame_pairs(clean: &AudioClip, degraded: &AudioClip, spec: &FrameSpec) -> Result<FramePairs, MetricError> {
    if clean.sample_rate_hz != degraded.sample_rate_hz {
        return Err(MetricError::RateMismatch(clean.sample_rate_hz, degraded.sample_rate_hz));
    }
    if !(0.0..1.0).contains(&spec.overlap_fraction) || spec.frame_ms <= 0.0 {
        return Err(MetricError::InvalidArgument(format!("frame spec {spec:?}")));
    }
    let fs = clean.sample_rate_hz;
    let len = spec.frame_len(fs);
    let hop = spec.hop(fs);
    let n = clean.len().min(degraded.len());
    if len == 0 || n < len {
        return Err(MetricError::TooShort { clean: clean.len(), degraded: degraded.len(), frame_len: len });
    }
    if clean.samples[..n].iter().all(|&v| v == 0.0) {
        return Err(MetricError::SilentReference);
    }
    let window = spec.window_coefficients(len);
    let count = 1 + (n - len) / hop;
    let cut = |x: &[f32], start: usize| -> Vec<f64> { x[start..start + len].iter().zip(&window).map(|(&v, &w)| v as f64 * w).collect() };
    let starts = (0..count).map(|i| i * hop);
    Ok(FramePairs {
        clean: starts.clone().map(|s| cut(&clean.samples, s)).collect(),
        degraded: starts.map(|s| cut(&degraded.samples, s)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_at_16k() {
        let spec = FrameSpec::default();
        assert_eq!(spec.frame_len(16000), 480);
        assert_eq!(spec.hop(16000), 120);
    }

    #[test]
    fn frame_count_covers_full_frames_only() {
        let a = AudioClip::new(vec![0.1; 1000]);
        let b = AudioClip::new(vec![0.1; 1200]);
        let f = frame_pairs(&a, &b, &FrameSpec::default()).unwrap();
        assert_eq!(f.clean.len(), 1 + (1000 - 480) / 120);
    }

    #[test]
    fn too_short_and_silent() {
        let spec = FrameSpec::default();
        let short = AudioClip::new(vec![0.1; 100]);
        assert!(matches!(frame_pairs(&short, &short, &spec), Err(MetricError::TooShort { .. })));
        let silent = AudioClip::new(vec![0.0; 1000]);
        assert!(matches!(frame_pairs(&silent, &silent, &spec), Err(MetricError::SilentReference)));
    }
}
