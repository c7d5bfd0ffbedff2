use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::frames::frame_pairs;
use super::{trimmed_low_mean, MetricConfig, MetricError};
use crate::audio::AudioClip;

const NUM_BANDS: usize = 25;
const K_MAX: f64 = 20.0;
const K_LOCMAX: f64 = 1.0;

const CENTER_HZ: [f64; NUM_BANDS] = [
    50.0, 120.0, 190.0, 260.0, 330.0, 400.0, 470.0, 540.0, 617.372, 703.378, 798.717, 904.128, 1020.38, 1148.30, 1288.72,
    1442.54, 1610.70, 1794.16, 1993.93, 2211.08, 2446.71, 2701.97, 2978.04, 3276.17, 3597.63,
];

const BANDWIDTH_HZ: [f64; NUM_BANDS] = [
    70.0, 70.0, 70.0, 70.0, 70.0, 70.0, 70.0, 77.3724, 86.0056, 95.3398, 105.411, 116.256, 127.914, 140.423, 153.823,
    168.154, 183.457, 199.776, 217.153, 235.631, 255.255, 276.072, 298.126, 321.465, 346.136,
];

/// Gaussian-shaped critical-band filters over the lower half of an
/// `n_fft`-point spectrum, truncated below their −30 dB point.
struct FilterBank {
    n_fft: usize,
    filters: Vec<Vec<f64>>,
    fft: Arc<dyn Fft<f64>>,
}

impl FilterBank {
    fn new(sample_rate: u32, frame_len: usize) -> Self {
        let n_fft = (2 * frame_len).next_power_of_two();
        let half = n_fft / 2;
        let max_freq = sample_rate as f64 / 2.0;
        let min_factor = (-30.0f64 / (2.0 * 2.303)).exp();
        let filters = (0..NUM_BANDS)
            .map(|i| {
                let f0 = (CENTER_HZ[i] / max_freq * half as f64).floor();
                let bw = BANDWIDTH_HZ[i] / max_freq * half as f64;
                let norm = BANDWIDTH_HZ[0].ln() - BANDWIDTH_HZ[i].ln();
                (0..half)
                    .map(|j| {
                        let v = (-11.0 * ((j as f64 - f0) / bw).powi(2) + norm).exp();
                        if v > min_factor {
                            v
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(n_fft);
        Self { n_fft, filters, fft }
    }

    /// Band energies in dB (floored at −100 dB).
    fn band_energies_db(&self, frame: &[f64]) -> [f64; NUM_BANDS] {
        let mut buf: Vec<Complex<f64>> = frame.iter().map(|&v| Complex::new(v, 0.0)).collect();
        buf.resize(self.n_fft, Complex::new(0.0, 0.0));
        self.fft.process(&mut buf);
        let power: Vec<f64> = buf[..self.n_fft / 2].iter().map(|c| c.norm_sqr()).collect();
        let mut out = [0.0; NUM_BANDS];
        for (o, f) in out.iter_mut().zip(&self.filters) {
            let e: f64 = power.iter().zip(f).map(|(p, w)| p * w).sum();
            *o = 10.0 * e.max(1e-10).log10();
        }
        out
    }
}

/// Energy of the spectral peak nearest to each band, found by following the
/// slope uphill.
fn nearest_peaks(energy: &[f64; NUM_BANDS], slope: &[f64]) -> Vec<f64> {
    (0..NUM_BANDS - 1)
        .map(|i| {
            if slope[i] > 0.0 {
                let mut n = i;
                while n < NUM_BANDS - 1 && slope[n] > 0.0 {
                    n += 1;
                }
                energy[n]
            } else {
                let mut n = i as isize;
                while n >= 0 && slope[n as usize] <= 0.0 {
                    n -= 1;
                }
                energy[(n + 1) as usize]
            }
        })
        .collect()
}

fn weights(energy: &[f64; NUM_BANDS], peaks: &[f64]) -> Vec<f64> {
    let global_max = energy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..NUM_BANDS - 1)
        .map(|i| {
            let w_max = K_MAX / (K_MAX + global_max - energy[i]);
            let w_loc = K_LOCMAX / (K_LOCMAX + peaks[i] - energy[i]);
            w_max * w_loc
        })
        .collect()
}

/// Per-frame weighted spectral slope distance.
pub fn wss_frames(clean: &AudioClip, degraded: &AudioClip, cfg: &MetricConfig) -> Result<Vec<f64>, MetricError> {
    let frames = frame_pairs(clean, degraded, &cfg.frame)?;
    let bank = FilterBank::new(clean.sample_rate_hz, cfg.frame.frame_len(clean.sample_rate_hz));
    Ok(frames
        .clean
        .iter()
        .zip(&frames.degraded)
        .map(|(c, d)| {
            let ec = bank.band_energies_db(c);
            let ed = bank.band_energies_db(d);
            let sc: Vec<f64> = ec.windows(2).map(|w| w[1] - w[0]).collect();
            let sd: Vec<f64> = ed.windows(2).map(|w| w[1] - w[0]).collect();
            let wc = weights(&ec, &nearest_peaks(&ec, &sc));
            let wd = weights(&ed, &nearest_peaks(&ed, &sd));
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..NUM_BANDS - 1 {
                let w = (wc[i] + wd[i]) / 2.0;
                num += w * (sc[i] - sd[i]).powi(2);
                den += w;
            }
            num / den
        })
        .collect())
}

/// Mean WSS over the lowest `keep_fraction` of frames.
pub fn wss(clean: &AudioClip, degraded: &AudioClip, cfg: &MetricConfig) -> Result<f64, MetricError> {
    Ok(trimmed_low_mean(wss_frames(clean, degraded, cfg)?, cfg.keep_fraction))
}
