use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::clip::mean_square;
use super::{AudioClip, AudioError, NoiseCondition};

/// Result of [`mix_at_snr`].
#[derive(Clone, Debug)]
pub struct Mixture {
    /// Clipped to `[-1, 1]`; carries the noise condition.
    pub clip: AudioClip,
    /// `clean + alpha·noise` before clipping, in f64.
    pub premix: Vec<f64>,
    pub alpha: f64,
    pub noise_offset: usize,
    pub clipped_samples: usize,
}

impl Mixture {
    pub fn measured_snr_db(&self, clean: &AudioClip) -> f64 {
        measured_snr_db(&clean.samples, &self.premix)
    }
}

/// `10·log10(Σ clean² / Σ (mixture − clean)²)`.
pub fn measured_snr_db(clean: &[f32], mixture: &[f64]) -> f64 {
    let (mut signal, mut noise) = (0.0f64, 0.0f64);
    for (&c, &m) in clean.iter().zip(mixture) {
        let c = c as f64;
        signal += c * c;
        noise += (m - c) * (m - c);
    }
    10.0 * (signal / noise).log10()
}

/// Adds noise to `clean` at `snr_db`, with power measured as the
/// full-utterance mean square of the clean signal and of the selected noise
/// segment.
///
/// The segment starts at a seed-determined offset; noise shorter than the
/// clean clip is looped from that offset. The output is hard clipped to
/// `[-1, 1]` and the number of clipped samples is reported.
pub fn mix_at_snr(clean: &AudioClip, noise: &AudioClip, snr_db: f64, rng_seed: u64) -> Result<Mixture, AudioError> {
    if clean.sample_rate_hz != noise.sample_rate_hz {
        return Err(AudioError::RateMismatch(clean.sample_rate_hz, noise.sample_rate_hz));
    }
    if clean.is_empty() || clean.power() == 0.0 {
        return Err(AudioError::Silent("clean speech"));
    }
    if noise.is_empty() || noise.power() == 0.0 {
        return Err(AudioError::Silent("noise"));
    }
    if !snr_db.is_finite() {
        return Err(AudioError::InvalidArgument(format!("snr_db = {snr_db}")));
    }
    let (n_clean, n_noise) = (clean.len(), noise.len());
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let noise_offset = if n_noise > n_clean { rng.gen_range(0..=n_noise - n_clean) } else { rng.gen_range(0..n_noise) };
    let segment: Vec<f32> = (0..n_clean).map(|i| noise.samples[(noise_offset + i) % n_noise]).collect();
    let p_noise = mean_square(&segment);
    if p_noise == 0.0 {
        return Err(AudioError::Silent("noise segment"));
    }
    let alpha = (clean.power() / (p_noise * 10f64.powf(snr_db / 10.0))).sqrt();
    let premix: Vec<f64> = clean.samples.iter().zip(&segment).map(|(&c, &n)| c as f64 + alpha * n as f64).collect();
    let mut clipped_samples = 0;
    let samples = premix
        .iter()
        .map(|&v| {
            if v.abs() > 1.0 {
                clipped_samples += 1;
            }
            v.clamp(-1.0, 1.0) as f32
        })
        .collect();
    if clipped_samples > 0 {
        log::debug!("{}: clipped {clipped_samples} samples at {snr_db} dB", clean.utterance_id);
    }
    let mut clip = clean.with_samples(samples);
    clip.condition = Some(NoiseCondition { noise_type: noise.utterance_id.clone(), snr_db });
    Ok(Mixture { clip, premix, alpha, noise_offset, clipped_samples })
}
