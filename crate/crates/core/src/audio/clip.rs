use serde::{Deserialize, Serialize};

use super::AudioError;

/// The only sample rate accepted at pipeline entry points.
pub const SAMPLE_RATE: u32 = 16_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseCondition {
    pub noise_type: String,
    pub snr_db: f64,
}

/// Mono PCM waveform plus identity tags.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate_hz: u32,
    pub utterance_id: String,
    pub speaker_id: String,
    pub language: String,
    pub condition: Option<NoiseCondition>,
}

impl AudioClip {
    /// A 16 kHz clip with empty identity tags.
    pub fn new(samples: Vec<f32>) -> Self {
        Self {
            samples,
            sample_rate_hz: SAMPLE_RATE,
            utterance_id: String::new(),
            speaker_id: String::new(),
            language: String::new(),
            condition: None,
        }
    }

    pub fn with_id(mut self, utterance_id: impl Into<String>) -> Self {
        self.utterance_id = utterance_id.into();
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Mean squared amplitude, accumulated in f64.
    pub fn power(&self) -> f64 {
        mean_square(&self.samples)
    }

    /// Same tags, new samples.
    pub fn with_samples(&self, samples: Vec<f32>) -> Self {
        Self { samples, ..self.clone_tags() }
    }

    fn clone_tags(&self) -> Self {
        Self {
            samples: Vec::new(),
            sample_rate_hz: self.sample_rate_hz,
            utterance_id: self.utterance_id.clone(),
            speaker_id: self.speaker_id.clone(),
            language: self.language.clone(),
            condition: self.condition.clone(),
        }
    }

    /// `y[n] = x[n] − coef·x[n−1]` with `x[−1] = 0`.
    pub fn preemphasis(&self, coef: f32) -> Result<Self, AudioError> {
        self.check_coef(coef)?;
        let mut out = Vec::with_capacity(self.len());
        let coef = coef as f64;
        let mut prev = 0.0f64;
        for &x in &self.samples {
            let x = x as f64;
            out.push((x - coef * prev) as f32);
            prev = x;
        }
        Ok(self.with_samples(out))
    }

    /// Inverse recursion of [`AudioClip::preemphasis`]: `x[n] = y[n] + coef·x[n−1]`.
    pub fn deemphasis(&self, coef: f32) -> Result<Self, AudioError> {
        self.check_coef(coef)?;
        let mut out = Vec::with_capacity(self.len());
        let coef = coef as f64;
        let mut prev = 0.0f64;
        for &y in &self.samples {
            prev = y as f64 + coef * prev;
            out.push(prev as f32);
        }
        Ok(self.with_samples(out))
    }

    fn check_coef(&self, coef: f32) -> Result<(), AudioError> {
        if self.is_empty() {
            return Err(AudioError::EmptyClip(self.utterance_id.clone()));
        }
        if !(0.0..1.0).contains(&coef) {
            return Err(AudioError::InvalidArgument(format!("emphasis coefficient {coef} outside [0, 1)")));
        }
        Ok(())
    }
}

pub(crate) fn mean_square(x: &[f32]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>() / x.len() as f64
}
