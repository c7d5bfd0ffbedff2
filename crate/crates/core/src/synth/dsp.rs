//! Small filters for shaping synthetic noise.

use std::f64::consts::PI;

use crate::audio::SAMPLE_RATE;

const FS: f64 = SAMPLE_RATE as f64;

/// Direct-form I biquad with cookbook coefficients.
#[derive(Clone, Debug)]
pub(crate) struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
    x: [f64; 2],
    y: [f64; 2],
}

impl Biquad {
    fn from_raw(b0: f64, b1: f64, b2: f64, a0: f64, a1: f64, a2: f64) -> Self {
        Self { b: [b0 / a0, b1 / a0, b2 / a0], a: [a1 / a0, a2 / a0], x: [0.0; 2], y: [0.0; 2] }
    }

    fn omega(freq: f64, q: f64) -> (f64, f64) {
        let w = 2.0 * PI * freq / FS;
        (w.cos(), w.sin() / (2.0 * q))
    }

    pub fn lowpass(freq: f64, q: f64) -> Self {
        let (c, alpha) = Self::omega(freq, q);
        Self::from_raw((1.0 - c) / 2.0, 1.0 - c, (1.0 - c) / 2.0, 1.0 + alpha, -2.0 * c, 1.0 - alpha)
    }

    pub fn highpass(freq: f64, q: f64) -> Self {
        let (c, alpha) = Self::omega(freq, q);
        Self::from_raw((1.0 + c) / 2.0, -(1.0 + c), (1.0 + c) / 2.0, 1.0 + alpha, -2.0 * c, 1.0 - alpha)
    }

    /// Constant 0 dB peak gain.
    pub fn bandpass(freq: f64, q: f64) -> Self {
        let (c, alpha) = Self::omega(freq, q);
        Self::from_raw(alpha, 0.0, -alpha, 1.0 + alpha, -2.0 * c, 1.0 - alpha)
    }

    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.b[1] * self.x[0] + self.b[2] * self.x[1] - self.a[0] * self.y[0] - self.a[1] * self.y[1];
        self.x = [x, self.x[0]];
        self.y = [y, self.y[0]];
        y
    }

    pub fn run(&mut self, signal: &mut [f64]) {
        for v in signal.iter_mut() {
            *v = self.process(*v);
        }
    }
}

/// Paul Kellet's economy pink filter.
pub(crate) fn pink(white: &[f64]) -> Vec<f64> {
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    white
        .iter()
        .map(|&w| {
            b0 = 0.99765 * b0 + w * 0.0990460;
            b1 = 0.96300 * b1 + w * 0.2965164;
            b2 = 0.57000 * b2 + w * 1.0526913;
            b0 + b1 + b2 + w * 0.1848
        })
        .collect()
}

/// Leaky integration of white noise.
pub(crate) fn brown(white: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    white
        .iter()
        .map(|&w| {
            acc = 0.996 * acc + 0.06 * w;
            acc
        })
        .collect()
}

pub(crate) fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Scales to the given RMS, then limits peaks to ±0.99.
pub(crate) fn normalize(x: &mut [f64], target_rms: f64) {
    let r = rms(x);
    if r > 0.0 {
        let g = target_rms / r;
        for v in x.iter_mut() {
            *v = (*v * g).clamp(-0.99, 0.99);
        }
    }
}
