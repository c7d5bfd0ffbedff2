use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dsp::{normalize, Biquad};
use crate::audio::{AudioClip, SAMPLE_RATE};

const FS: f64 = SAMPLE_RATE as f64;
const MAX_HARMONIC_HZ: f64 = 5000.0;

/// Voice parameters of one synthetic talker.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeakerProfile {
    pub speaker_id: String,
    pub language: String,
    pub f0_hz: f64,
    /// Formant frequency multiplier (shorter tract → larger).
    pub tract_scale: f64,
    pub syllable_rate_hz: f64,
    pub breathiness: f64,
}

struct LanguageStyle {
    /// (F1, F2, F3) in Hz.
    vowels: &'static [(f64, f64, f64)],
    syllable_rate: f64,
    pitch_span_semitones: f64,
    fricative_prob: f64,
    pause_prob: f64,
}

const ENGLISH_VOWELS: &[(f64, f64, f64)] = &[
    (270.0, 2290.0, 3010.0),
    (390.0, 1990.0, 2550.0),
    (530.0, 1840.0, 2480.0),
    (660.0, 1720.0, 2410.0),
    (730.0, 1090.0, 2440.0),
    (570.0, 840.0, 2410.0),
    (440.0, 1020.0, 2240.0),
    (300.0, 870.0, 2240.0),
    (640.0, 1190.0, 2390.0),
    (490.0, 1350.0, 1690.0),
];
const CATALAN_VOWELS: &[(f64, f64, f64)] = &[
    (290.0, 2250.0, 2900.0),
    (420.0, 2050.0, 2650.0),
    (580.0, 1800.0, 2550.0),
    (750.0, 1350.0, 2500.0),
    (580.0, 1000.0, 2450.0),
    (430.0, 850.0, 2400.0),
    (310.0, 750.0, 2300.0),
    (480.0, 1400.0, 2500.0),
];
const KOREAN_VOWELS: &[(f64, f64, f64)] = &[
    (300.0, 2300.0, 3000.0),
    (470.0, 2000.0, 2700.0),
    (760.0, 1400.0, 2600.0),
    (560.0, 950.0, 2500.0),
    (330.0, 820.0, 2350.0),
    (340.0, 1500.0, 2400.0),
    (520.0, 1150.0, 2500.0),
];

fn style(language: &str) -> LanguageStyle {
    match language {
        "catalan" => LanguageStyle { vowels: CATALAN_VOWELS, syllable_rate: 5.6, pitch_span_semitones: 5.0, fricative_prob: 0.4, pause_prob: 0.12 },
        "korean" => LanguageStyle { vowels: KOREAN_VOWELS, syllable_rate: 6.3, pitch_span_semitones: 3.0, fricative_prob: 0.25, pause_prob: 0.1 },
        _ => LanguageStyle { vowels: ENGLISH_VOWELS, syllable_rate: 4.6, pitch_span_semitones: 6.0, fricative_prob: 0.35, pause_prob: 0.15 },
    }
}

/// `n` talkers alternating low and high voices.
pub fn speakers(language: &str, prefix: &str, n: usize, seed: u64) -> Vec<SpeakerProfile> {
    let st = style(language);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let high = i % 2 == 1;
            SpeakerProfile {
                speaker_id: format!("{language}_{prefix}{i:02}"),
                language: language.to_string(),
                f0_hz: if high { rng.gen_range(170.0..240.0) } else { rng.gen_range(95.0..140.0) },
                tract_scale: if high { rng.gen_range(1.08..1.2) } else { rng.gen_range(0.92..1.02) },
                syllable_rate_hz: st.syllable_rate * rng.gen_range(0.85..1.15),
                breathiness: rng.gen_range(0.01..0.06),
            }
        })
        .collect()
}

fn formant_gain(f: f64, formants: (f64, f64, f64), scale: f64) -> f64 {
    let bands = [(formants.0, 80.0, 1.0), (formants.1, 110.0, 0.6), (formants.2, 150.0, 0.3)];
    let tilt = 1.0 / (1.0 + f / 800.0);
    bands.iter().map(|&(fc, bw, g)| g / (1.0 + ((f - fc * scale) / bw).powi(2)).sqrt()).sum::<f64>() * tilt
}

/// Syllable sequence of formant-shaped harmonic complexes with fricative
/// onsets and pauses, normalized to a 0.08 RMS level.
pub fn synth_utterance(spk: &SpeakerProfile, utterance_id: &str, duration_s: f64, seed: u64) -> AudioClip {
    let st = style(&spk.language);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (duration_s * FS).round().max(1.0) as usize;
    let mut out = vec![0.0f64; n];
    let mut t = (0.03 + rng.gen::<f64>() * 0.05) * FS;
    let tail = 0.04 * FS;
    let mut phase = 0.0f64;
    let mut hp = Biquad::highpass(2500.0, 0.7);
    while t < n as f64 - tail {
        if rng.gen::<f64>() < st.pause_prob {
            t += rng.gen_range(0.08..0.25) * FS;
            continue;
        }
        let start = t as usize;
        let len = ((rng.gen_range(0.6..1.4) / spk.syllable_rate_hz) * FS) as usize;
        let end = (start + len).min(n);
        let mut voiced_start = start;
        if rng.gen::<f64>() < st.fricative_prob {
            let flen = (rng.gen_range(0.03..0.07) * FS) as usize;
            let amp = rng.gen_range(0.1..0.3);
            for i in start..(start + flen).min(end) {
                let w: f64 = StandardNormal.sample(&mut rng);
                let env = (PI * (i - start) as f64 / flen as f64).sin();
                out[i] += amp * env * hp.process(w);
            }
            voiced_start = (start + flen).min(end);
        }
        let vowel = st.vowels[rng.gen_range(0..st.vowels.len())];
        let pos = start as f64 / n as f64;
        let accent = rng.gen_range(-0.5..1.0) * st.pitch_span_semitones;
        let f0_a = spk.f0_hz * 2f64.powf((accent - 2.0 * pos) / 12.0);
        let f0_b = f0_a * 2f64.powf(rng.gen_range(-2.0..1.0) / 12.0);
        let n_harm = (MAX_HARMONIC_HZ / f0_a.max(f0_b)).floor().max(1.0) as usize;
        let gains: Vec<f64> = (1..=n_harm).map(|h| formant_gain(h as f64 * f0_a, vowel, spk.tract_scale)).collect();
        let vlen = end.saturating_sub(voiced_start);
        let amp = rng.gen_range(0.5..1.0);
        for (k, i) in (voiced_start..end).enumerate() {
            let frac = k as f64 / vlen.max(1) as f64;
            let f0 = f0_a + (f0_b - f0_a) * frac;
            phase = (phase + 2.0 * PI * f0 / FS) % (2.0 * PI);
            let env = if frac < 0.2 { 0.5 - 0.5 * (PI * frac / 0.2).cos() } else if frac > 0.7 { 0.5 + 0.5 * (PI * (frac - 0.7) / 0.3).cos() } else { 1.0 };
            // sin(hφ) by the Chebyshev recurrence.
            let c2 = 2.0 * phase.cos();
            let (mut s_prev, mut s_cur) = (0.0, phase.sin());
            let mut acc = 0.0;
            for g in &gains {
                acc += g * s_cur;
                let next = c2 * s_cur - s_prev;
                s_prev = s_cur;
                s_cur = next;
            }
            let breath: f64 = StandardNormal.sample(&mut rng);
            out[i] += amp * env * (acc + spk.breathiness * breath);
        }
        t = end as f64 + rng.gen_range(0.0..0.04) * FS;
    }
    normalize(&mut out, 0.08);
    let mut clip = AudioClip::new(out.into_iter().map(|v| v as f32).collect()).with_id(utterance_id);
    clip.speaker_id = spk.speaker_id.clone();
    clip.language = spk.language.clone();
    clip
}

/// Recipe for a set of synthetic utterances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeechSetSpec {
    pub language: String,
    /// Distinguishes disjoint speaker pools of one language (e.g. "s", "t").
    pub speaker_prefix: String,
    pub n_speakers: usize,
    pub utterances_per_speaker: usize,
    pub min_duration_s: f64,
    pub max_duration_s: f64,
    pub seed: u64,
}

/// Utterance ids are `<speaker_id>_u<index>`.
pub fn synth_speech_set(spec: &SpeechSetSpec) -> Vec<AudioClip> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let spks = speakers(&spec.language, &spec.speaker_prefix, spec.n_speakers, rng.gen());
    let mut out = Vec::with_capacity(spec.n_speakers * spec.utterances_per_speaker);
    for spk in &spks {
        for u in 0..spec.utterances_per_speaker {
            let dur = if spec.max_duration_s > spec.min_duration_s { rng.gen_range(spec.min_duration_s..spec.max_duration_s) } else { spec.min_duration_s };
            let dur = (dur * 100.0).round() / 100.0;
            out.push(synth_utterance(spk, &format!("{}_u{u:03}", spk.speaker_id), dur, rng.gen()));
        }
    }
    out
}
