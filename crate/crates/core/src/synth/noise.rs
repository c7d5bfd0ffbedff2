use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dsp::{brown, normalize, pink, Biquad};
use super::speech::{speakers, synth_utterance};
use crate::audio::{AudioClip, SAMPLE_RATE};

const FS: f64 = SAMPLE_RATE as f64;

/// Synthetic noise types. The first ten form the training family, the last
/// five the held-out family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    White,
    Pink,
    Brown,
    Hum,
    Hiss,
    Rumble,
    Band,
    AmWhite,
    Clicks,
    Chirps,
    Office,
    Bus,
    Street,
    Living,
    Cafe,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 15] = [
        NoiseKind::White,
        NoiseKind::Pink,
        NoiseKind::Brown,
        NoiseKind::Hum,
        NoiseKind::Hiss,
        NoiseKind::Rumble,
        NoiseKind::Band,
        NoiseKind::AmWhite,
        NoiseKind::Clicks,
        NoiseKind::Chirps,
        NoiseKind::Office,
        NoiseKind::Bus,
        NoiseKind::Street,
        NoiseKind::Living,
        NoiseKind::Cafe,
    ];

    pub fn family_a() -> &'static [NoiseKind] {
        &Self::ALL[..10]
    }

    pub fn family_b() -> &'static [NoiseKind] {
        &Self::ALL[10..]
    }

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::White => "white",
            NoiseKind::Pink => "pink",
            NoiseKind::Brown => "brown",
            NoiseKind::Hum => "hum",
            NoiseKind::Hiss => "hiss",
            NoiseKind::Rumble => "rumble",
            NoiseKind::Band => "band",
            NoiseKind::AmWhite => "am_white",
            NoiseKind::Clicks => "clicks",
            NoiseKind::Chirps => "chirps",
            NoiseKind::Office => "office",
            NoiseKind::Bus => "bus",
            NoiseKind::Street => "street",
            NoiseKind::Living => "living",
            NoiseKind::Cafe => "cafe",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }
}

fn white(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn filtered(rng: &mut ChaCha8Rng, n: usize, mut f: Biquad) -> Vec<f64> {
    let mut x = white(rng, n);
    f.run(&mut x);
    x
}

fn add_scaled(dst: &mut [f64], src: &[f64], gain: f64) {
    let mut src = src.to_vec();
    normalize(&mut src, 1.0);
    for (d, s) in dst.iter_mut().zip(src) {
        *d += gain * s;
    }
}

/// Decaying bursts at Poisson times.
fn bursts(rng: &mut ChaCha8Rng, n: usize, rate_hz: f64, decay_s: f64, mut shape: Biquad) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let mut t = 0.0;
    loop {
        t += -rng.gen::<f64>().max(1e-12).ln() / rate_hz * FS;
        let start = t as usize;
        if start >= n {
            break;
        }
        let amp = rng.gen_range(0.3..1.0);
        let len = (decay_s * FS * 5.0) as usize;
        for i in start..(start + len).min(n) {
            let w: f64 = StandardNormal.sample(rng);
            out[i] += amp * w * (-((i - start) as f64) / (decay_s * FS)).exp();
        }
    }
    shape.run(&mut out);
    out
}

fn tones(n: usize, freqs: &[(f64, f64)]) -> Vec<f64> {
    (0..n).map(|i| freqs.iter().map(|&(f, a)| a * (2.0 * PI * f * i as f64 / FS).sin()).sum()).collect()
}

fn babble(rng: &mut ChaCha8Rng, n: usize, voices: usize) -> Vec<f64> {
    let spks = speakers("english", "b", voices, rng.gen());
    let mut out = vec![0.0; n];
    for spk in &spks {
        let u = synth_utterance(spk, "babble", n as f64 / FS, rng.gen());
        for (o, &s) in out.iter_mut().zip(&u.samples) {
            *o += s as f64;
        }
    }
    out
}

/// Renders `n_samples` of a noise type at 0.1 RMS. The clip id is the type name.
pub fn synth_noise(kind: NoiseKind, n_samples: usize, seed: u64) -> AudioClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (kind as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let n = n_samples;
    let mut x = match kind {
        NoiseKind::White => white(&mut rng, n),
        NoiseKind::Pink => pink(&white(&mut rng, n)),
        NoiseKind::Brown => brown(&white(&mut rng, n)),
        NoiseKind::Hum => {
            let f = if rng.gen::<bool>() { 50.0 } else { 60.0 };
            let partials: Vec<(f64, f64)> = (1..=8).map(|h| (f * h as f64, 1.0 / h as f64)).collect();
            let mut x = tones(n, &partials);
            add_scaled(&mut x, &white(&mut rng, n), 0.02);
            x
        }
        NoiseKind::Hiss => filtered(&mut rng, n, Biquad::highpass(4000.0, 0.707)),
        NoiseKind::Rumble => filtered(&mut rng, n, Biquad::lowpass(150.0, 0.707)),
        NoiseKind::Band => filtered(&mut rng, n, Biquad::bandpass(1000.0, 2.0)),
        NoiseKind::AmWhite => {
            let rate = rng.gen_range(3.0..6.0);
            white(&mut rng, n).into_iter().enumerate().map(|(i, w)| w * (0.6 + 0.4 * (2.0 * PI * rate * i as f64 / FS).sin())).collect()
        }
        NoiseKind::Clicks => {
            let mut x = bursts(&mut rng, n, 20.0, 0.002, Biquad::highpass(500.0, 0.707));
            add_scaled(&mut x, &white(&mut rng, n), 0.01);
            x
        }
        NoiseKind::Chirps => {
            let sweep = (0.3 * FS) as usize;
            let (f_lo, f_hi) = (rng.gen_range(200.0..400.0), rng.gen_range(2500.0..3500.0));
            let mut phase = 0.0;
            (0..n)
                .map(|i| {
                    let frac = (i % sweep) as f64 / sweep as f64;
                    phase = (phase + 2.0 * PI * (f_lo + (f_hi - f_lo) * frac) / FS) % (2.0 * PI);
                    phase.sin()
                })
                .collect()
        }
        NoiseKind::Office => {
            let mut x = pink(&white(&mut rng, n));
            add_scaled(&mut x, &bursts(&mut rng, n, 6.0, 0.004, Biquad::bandpass(2500.0, 1.5)), 1.5);
            add_scaled(&mut x, &tones(n, &[(120.0, 1.0), (240.0, 0.4)]), 0.1);
            x
        }
        NoiseKind::Bus => {
            let mut x = filtered(&mut rng, n, Biquad::lowpass(300.0, 0.707));
            let f0 = rng.gen_range(35.0..50.0);
            let mut phase = 0.0;
            let engine: Vec<f64> = (0..n)
                .map(|i| {
                    let f = f0 * (1.0 + 0.1 * (2.0 * PI * 0.2 * i as f64 / FS).sin());
                    phase = (phase + 2.0 * PI * f / FS) % (2.0 * PI);
                    (1..=6).map(|h| (h as f64 * phase).sin() / h as f64).sum::<f64>()
                })
                .collect();
            add_scaled(&mut x, &engine, 0.8);
            add_scaled(&mut x, &pink(&white(&mut rng, n)), 0.3);
            x
        }
        NoiseKind::Street => {
            let mut x = brown(&white(&mut rng, n));
            let car = filtered(&mut rng, n, Biquad::bandpass(700.0, 0.8));
            let period = rng.gen_range(2.0..4.0) * FS;
            let swell: Vec<f64> = car
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    let ph = (i as f64 % period) / period - 0.5;
                    c * (-(ph * ph) / 0.02).exp()
                })
                .collect();
            add_scaled(&mut x, &swell, 1.2);
            let horn = tones(n, &[(440.0, 1.0), (554.0, 0.7)]);
            let gate = (4.0 * FS) as usize;
            let horn: Vec<f64> = horn.iter().enumerate().map(|(i, &h)| if i % gate < (0.3 * FS) as usize { h } else { 0.0 }).collect();
            add_scaled(&mut x, &horn, 0.4);
            x
        }
        NoiseKind::Living => {
            let mut tv = babble(&mut rng, n, 1);
            Biquad::lowpass(3000.0, 0.707).run(&mut tv);
            let mut x = tv;
            let chord = tones(n, &[(261.6, 1.0), (329.6, 0.8), (392.0, 0.6)]);
            let chord: Vec<f64> = chord.iter().enumerate().map(|(i, &c)| c * (0.5 + 0.5 * (2.0 * PI * 0.5 * i as f64 / FS).sin())).collect();
            add_scaled(&mut x, &chord, 0.5);
            add_scaled(&mut x, &pink(&white(&mut rng, n)), 0.2);
            x
        }
        NoiseKind::Cafe => {
            let mut x = babble(&mut rng, n, 6);
            let mut clinks = vec![0.0; n];
            let mut t = 0.0;
            loop {
                t += -rng.gen::<f64>().max(1e-12).ln() / 1.5 * FS;
                if t as usize >= n {
                    break;
                }
                let f = rng.gen_range(3000.0..6000.0);
                for i in (t as usize)..(t as usize + 2400).min(n) {
                    let k = (i - t as usize) as f64 / FS;
                    clinks[i] += (2.0 * PI * f * k).sin() * (-k / 0.03).exp();
                }
            }
            add_scaled(&mut x, &clinks, 0.3);
            x
        }
    };
    normalize(&mut x, 0.1);
    AudioClip::new(x.into_iter().map(|v| v as f32).collect()).with_id(kind.name())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_kind_renders() {
        for kind in NoiseKind::ALL {
            let c = synth_noise(kind, 8000, 3);
            assert_eq!(c.len(), 8000);
            assert_eq!(c.utterance_id, kind.name());
            assert!(c.power() > 1e-4, "{kind:?}");
            assert!(c.samples.iter().all(|v| v.is_finite() && v.abs() < 1.0));
            assert_eq!(NoiseKind::from_name(kind.name()), Some(kind));
        }
    }

    #[test]
    fn families_are_disjoint() {
        assert_eq!(NoiseKind::family_a().len(), 10);
        assert_eq!(NoiseKind::family_b().len(), 5);
        assert!(NoiseKind::family_a().iter().all(|k| !NoiseKind::family_b().contains(k)));
    }
}
