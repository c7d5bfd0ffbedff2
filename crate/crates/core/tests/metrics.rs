#[path = "support/composite_oracle.rs"]
mod composite_oracle;

use std::path::Path;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use seganforge::audio::{write_wav, AudioClip, NoiseCondition};
use seganforge::metrics::{
    composite_measures, composite_raw, evaluate_corpus, llr, llr_frames, pesq_external, segmental_snr, wss, wss_frames, Composite, EvalPair,
    MetricConfig, MetricError, PesqAdapter,
};

fn noise_clip(n: usize, amp: f32, seed: u64) -> AudioClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AudioClip::new((0..n).map(|_| rng.gen_range(-amp..amp)).collect())
}

fn ar1_clip(n: usize, rho: f64, seed: u64) -> AudioClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prev = 0.0f64;
    let samples = (0..n)
        .map(|_| {
            let w: f64 = StandardNormal.sample(&mut rng);
            prev = rho * prev + 0.02 * w;
            prev as f32
        })
        .collect();
    AudioClip::new(samples)
}

/// Frames cut the way the metric definitions describe: 30 ms, 75 % overlap,
/// Hanning `0.5(1 − cos(2πn/(L+1)))`, n = 1..L.
fn oracle_frames(x: &AudioClip, y: &AudioClip) -> Vec<(Vec<f64>, Vec<f64>)> {
    let len = 480;
    let hop = 120;
    let n = x.len().min(y.len());
    let win: Vec<f64> = (1..=len).map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (len + 1) as f64).cos()).collect();
    let mut out = Vec::new();
    let mut start = 0;
    while start + len <= n {
        let a = (0..len).map(|i| x.samples[start + i] as f64 * win[i]).collect();
        let b = (0..len).map(|i| y.samples[start + i] as f64 * win[i]).collect();
        out.push((a, b));
        start += hop;
    }
    out
}

fn low_mean(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let keep = ((v.len() as f64 * 0.95).round() as usize).max(1);
    v[..keep].iter().sum::<f64>() / keep as f64
}

mod wss_oracle {
    const CF: [f64; 25] = [
        50.0, 120.0, 190.0, 260.0, 330.0, 400.0, 470.0, 540.0, 617.372, 703.378, 798.717, 904.128, 1020.38, 1148.30, 1288.72,
        1442.54, 1610.70, 1794.16, 1993.93, 2211.08, 2446.71, 2701.97, 2978.04, 3276.17, 3597.63,
    ];
    const BW: [f64; 25] = [
        70.0, 70.0, 70.0, 70.0, 70.0, 70.0, 70.0, 77.3724, 86.0056, 95.3398, 105.411, 116.256, 127.914, 140.423, 153.823,
        168.154, 183.457, 199.776, 217.153, 235.631, 255.255, 276.072, 298.126, 321.465, 346.136,
    ];

    /// Direct O(N²) DFT power over bins 0..N/2.
    fn power_spectrum(frame: &[f64], n_fft: usize) -> Vec<f64> {
        (0..n_fft / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (n, &v) in frame.iter().enumerate() {
                    let ang = -2.0 * std::f64::consts::PI * ((k * n) % n_fft) as f64 / n_fft as f64;
                    re += v * ang.cos();
                    im += v * ang.sin();
                }
                re * re + im * im
            })
            .collect()
    }

    fn band_db(frame: &[f64]) -> Vec<f64> {
        let n_fft = 1024;
        let half = 512.0;
        let p = power_spectrum(frame, n_fft);
        let cutoff = (-30.0f64 / 4.606).exp();
        (0..25)
            .map(|b| {
                let centre = (CF[b] / 8000.0 * half).floor();
                let width = BW[b] / 8000.0 * half;
                let mut e = 0.0;
                for (j, pj) in p.iter().enumerate() {
                    let g = (-11.0 * ((j as f64 - centre) / width).powi(2) + (BW[0] / BW[b]).ln()).exp();
                    if g > cutoff {
                        e += g * pj;
                    }
                }
                10.0 * e.max(1e-10).log10()
            })
            .collect()
    }

    /// Level of the spectral peak a band belongs to: climb right while the
    /// slope rises, otherwise climb left while it falls.
    fn peak_levels(e: &[f64]) -> Vec<f64> {
        let slope: Vec<f64> = (0..24).map(|i| e[i + 1] - e[i]).collect();
        (0..24)
            .map(|i| {
                if slope[i] > 0.0 {
                    let top = (i..24).find(|&j| slope[j] <= 0.0).unwrap_or(24);
                    e[top]
                } else {
                    let top = (0..=i).rev().find(|&j| slope[j] > 0.0).map_or(0, |j| j + 1);
                    e[top]
                }
            })
            .collect()
    }

    pub fn frame_distance(c: &[f64], d: &[f64]) -> f64 {
        let (ec, ed) = (band_db(c), band_db(d));
        let (pc, pd) = (peak_levels(&ec), peak_levels(&ed));
        let gc = ec.iter().cloned().fold(f64::MIN, f64::max);
        let gd = ed.iter().cloned().fold(f64::MIN, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..24 {
            let wc = 20.0 / (20.0 + gc - ec[i]) * (1.0 / (1.0 + pc[i] - ec[i]));
            let wd = 20.0 / (20.0 + gd - ed[i]) * (1.0 / (1.0 + pd[i] - ed[i]));
            let w = 0.5 * (wc + wd);
            let diff = (ec[i + 1] - ec[i]) - (ed[i + 1] - ed[i]);
            num += w * diff * diff;
            den += w;
        }
        num / den
    }
}

mod llr_oracle {
    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
            x[row] = (b[row] - s) / a[row][row];
        }
        x
    }

    fn autocorr(x: &[f64], p: usize) -> Vec<f64> {
        (0..=p).map(|k| (0..x.len() - k).map(|n| x[n] * x[n + k]).sum()).collect()
    }

    /// Predictor `[1, a1..ap]` from the normal equations `R a = −r`.
    fn predictor(r: &[f64], p: usize) -> Vec<f64> {
        let m: Vec<Vec<f64>> = (0..p).map(|i| (0..p).map(|j| r[i.abs_diff(j)]).collect()).collect();
        let rhs: Vec<f64> = (1..=p).map(|i| -r[i]).collect();
        let mut a = vec![1.0];
        a.extend(solve(m, rhs));
        a
    }

    fn quad(a: &[f64], big_r: &[Vec<f64>]) -> f64 {
        let ra: Vec<f64> = big_r.iter().map(|row| row.iter().zip(a).map(|(x, y)| x * y).sum()).collect();
        a.iter().zip(&ra).map(|(x, y)| x * y).sum()
    }

    pub fn frame_llr(c: &[f64], d: &[f64], p: usize) -> f64 {
        let rc = autocorr(c, p);
        let rd = autocorr(d, p);
        let ac = predictor(&rc, p);
        let ad = predictor(&rd, p);
        let big_r: Vec<Vec<f64>> = (0..=p).map(|i| (0..=p).map(|j| rc[i.abs_diff(j)]).collect()).collect();
        (quad(&ad, &big_r) / quad(&ac, &big_r)).ln()
    }
}

#[test]
fn wss_matches_direct_dft_oracle() {
    let cfg = MetricConfig::default();
    let clean = ar1_clip(2400, 0.8, 3);
    let mut degraded = noise_clip(2400, 0.05, 4);
    for (d, c) in degraded.samples.iter_mut().zip(&clean.samples) {
        *d += 0.7 * c;
    }
    let frames = oracle_frames(&clean, &degraded);
    let expected: Vec<f64> = frames.iter().map(|(c, d)| wss_oracle::frame_distance(c, d)).collect();
    let got = wss_frames(&clean, &degraded, &cfg).unwrap();
    assert_eq!(got.len(), expected.len());
    for (g, e) in got.iter().zip(&expected) {
        assert!((g - e).abs() < 1e-6, "frame {g} vs oracle {e}");
    }
    let total = wss(&clean, &degraded, &cfg).unwrap();
    assert!((total - low_mean(expected)).abs() < 1e-6);
    assert!(total > 0.0);
}

#[test]
fn llr_matches_matrix_oracle() {
    let cfg = MetricConfig::default();
    let clean = ar1_clip(4800, 0.9, 5);
    let degraded = noise_clip(4800, 0.05, 6);
    let frames = oracle_frames(&clean, &degraded);
    let expected: Vec<f64> = frames.iter().map(|(c, d)| llr_oracle::frame_llr(c, d, 10)).collect();
    let got = llr_frames(&clean, &degraded, &cfg).unwrap();
    assert_eq!(got.len(), expected.len());
    for (g, e) in got.iter().zip(&expected) {
        assert!((g - e).abs() < 1e-6, "frame {g} vs oracle {e}");
    }
    let total = llr(&clean, &degraded, &cfg).unwrap();
    assert!((total - low_mean(expected)).abs() < 1e-6);
}

#[test]
fn composite_matches_oracle_on_random_tuples() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        let (p, l, w, s) = (rng.gen_range(-0.5..4.5), rng.gen_range(0.0..3.0), rng.gen_range(0.0..150.0), rng.gen_range(-10.0..35.0));
        let got = composite_measures(p, l, w, s);
        let want = composite_oracle::composite_oracle(p, l, w, s);
        assert!((got.csig - want[0]).abs() < 1e-9);
        assert!((got.cbak - want[1]).abs() < 1e-9);
        assert!((got.covl - want[2]).abs() < 1e-9);
    }
}

#[test]
fn composite_worked_cases() {
    assert_eq!(composite_measures(4.5, 0.0, 0.0, 35.0), Composite { csig: 5.0, cbak: 5.0, covl: 5.0 });
    let raw = composite_raw(4.5, 0.0, 0.0, 35.0);
    assert!((raw.csig - 5.8065).abs() < 1e-12 && (raw.cbak - 5.990).abs() < 1e-12 && (raw.covl - 5.2165).abs() < 1e-12);
    assert!((composite_raw(1.0, 2.0, 100.0, 0.0).csig - 0.738).abs() < 1e-12);
    assert_eq!(composite_measures(1.0, 2.0, 100.0, 0.0).csig, 1.0);
    assert_eq!(composite_measures(0.0, 0.0, 0.0, 0.0), Composite { csig: 3.093, cbak: 1.634, covl: 1.594 });
}

#[test]
fn ssnr_of_derived_constructions() {
    let cfg = MetricConfig::default();
    let clean = noise_clip(8000, 0.3, 9);
    let neg = clean.with_samples(clean.samples.iter().map(|v| -v).collect());
    assert!((segmental_snr(&clean, &neg, &cfg).unwrap() + 6.0206).abs() < 0.01);
    // Error = clean scaled so every frame sits at exactly 5 dB.
    let g = 10f64.powf(-5.0 / 20.0) as f32;
    let five = clean.with_samples(clean.samples.iter().map(|v| v * (1.0 - g)).collect());
    assert!((segmental_snr(&clean, &five, &cfg).unwrap() - 5.0).abs() < 0.01);
}

fn mock_adapter(dir: &Path, name: &str, body: &str) -> PesqAdapter {
    use std::os::unix::fs::PermissionsExt;
    let script = dir.join(name);
    std::fs::write(&script, format!("#!/bin/sh\n{body}\n")).unwrap();
    std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
    PesqAdapter::new(format!("{} {{clean}} {{degraded}}", script.display()))
}

fn pair(id: &str, noise: &str, snr: f64, clean: AudioClip, degraded: AudioClip) -> EvalPair {
    let mut d = degraded;
    d.condition = Some(NoiseCondition { noise_type: noise.into(), snr_db: snr });
    EvalPair::new(clean.with_id(id), d)
}

#[test]
fn mock_pesq_feeds_composites() {
    let dir = tempfile::tempdir().unwrap();
    let echo = mock_adapter(dir.path(), "pesq_ok", "echo \"P.862.2 prediction: MOS-LQO = 2.71\"");
    let clean = ar1_clip(8000, 0.9, 1);
    let noisy = clean.with_samples(clean.samples.iter().zip(&noise_clip(8000, 0.02, 2).samples).map(|(a, b)| a + b).collect());
    let a = dir.path().join("a.wav");
    let b = dir.path().join("b.wav");
    write_wav(&clean, &a).unwrap();
    write_wav(&noisy, &b).unwrap();
    assert_eq!(pesq_external(&a, &b, &echo).unwrap(), Some(2.71));

    let eval = evaluate_corpus(&[pair("u1", "white", 5.0, clean.clone(), noisy.clone())], &MetricConfig::default(), Some(&echo)).unwrap();
    let r = &eval.report;
    assert_eq!(r.pesq, Some(2.71));
    let c = composite_measures(2.71, r.llr, r.wss, r.ssnr);
    assert_eq!((r.csig, r.cbak, r.covl), (Some(c.csig), Some(c.cbak), Some(c.covl)));

    let garbage = mock_adapter(dir.path(), "pesq_bad", "echo 'no score today'");
    match pesq_external(&a, &b, &garbage) {
        Err(MetricError::PesqParse { output }) => assert!(output.contains("no score today")),
        other => panic!("expected parse error, got {other:?}"),
    }
    let eval = evaluate_corpus(
        &[pair("u1", "white", 5.0, clean.clone(), noisy.clone()), pair("u2", "white", 5.0, clean.clone(), noisy)],
        &MetricConfig::default(),
        Some(&garbage),
    );
    assert!(matches!(eval, Err(MetricError::NothingEvaluated)));

    let absent = PesqAdapter::new("/nonexistent/pesq {clean} {degraded}");
    let eval = evaluate_corpus(&[pair("u1", "white", 5.0, clean.clone(), clean)], &MetricConfig::default(), Some(&absent)).unwrap();
    assert_eq!((eval.report.pesq, eval.report.csig, eval.report.cbak, eval.report.covl), (None, None, None, None));
}

#[test]
fn corpus_mean_and_breakdown() {
    let cfg = MetricConfig::default();
    let clean = noise_clip(8000, 0.3, 10);
    // Every frame at 2 dB and at 10 dB respectively.
    let at = |db: f64| {
        let g = 10f64.powf(-db / 20.0) as f32;
        clean.with_samples(clean.samples.iter().map(|v| v * (1.0 - g)).collect())
    };
    let eval = evaluate_corpus(&[pair("a", "x", 2.0, clean.clone(), at(2.0)), pair("b", "y", 10.0, clean.clone(), at(10.0))], &cfg, None).unwrap();
    assert!((eval.report.ssnr - 6.0).abs() < 0.02, "{}", eval.report.ssnr);
    assert_eq!(eval.by_condition.len(), 2);
    assert!((eval.by_noise_type["y"].ssnr - 10.0).abs() < 0.02);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identities_hold(seed in any::<u64>(), n in 600usize..4000, amp in 0.01f32..0.9) {
        let cfg = MetricConfig::default();
        let x = noise_clip(n, amp, seed);
        prop_assert_eq!(llr(&x, &x, &cfg).unwrap(), 0.0);
        prop_assert_eq!(wss(&x, &x, &cfg).unwrap(), 0.0);
        prop_assert_eq!(segmental_snr(&x, &x, &cfg).unwrap(), 35.0);
    }

    #[test]
    fn llr_frames_are_non_negative(seed in any::<u64>(), rho in -0.95f64..0.95) {
        let x = ar1_clip(3000, rho, seed);
        let y = noise_clip(3000, 0.1, seed ^ 0xdead);
        let frames = llr_frames(&x, &y, &MetricConfig::default()).unwrap();
        prop_assert!(frames.iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn wss_is_gain_invariant(seed in any::<u64>(), gain in 0.05f32..1.0) {
        let x = noise_clip(3000, 0.4, seed);
        let y = x.with_samples(x.samples.iter().map(|v| v * gain).collect());
        prop_assert!(wss(&x, &y, &MetricConfig::default()).unwrap() <= 1e-6);
    }

    #[test]
    fn composites_are_clamped(p in -0.5f64..4.5, l in 0.0f64..10.0, w in 0.0f64..500.0, s in -10.0f64..35.0) {
        let c = composite_measures(p, l, w, s);
        for v in [c.csig, c.cbak, c.covl] {
            prop_assert!((1.0..=5.0).contains(&v));
        }
    }

    #[test]
    fn corpus_report_is_order_independent(seed in any::<u64>(), rot in 0usize..4) {
        let cfg = MetricConfig::default();
        let mut pairs: Vec<EvalPair> = (0..4u64)
            .map(|i| {
                let c = noise_clip(2000, 0.3, seed.wrapping_add(i));
                let d = noise_clip(2000, 0.1, seed.wrapping_add(100 + i));
                let mixed = c.with_samples(c.samples.iter().zip(&d.samples).map(|(a, b)| a + b).collect());
                pair(&format!("u{i}"), "n", 5.0, c, mixed)
            })
            .collect();
        let base = evaluate_corpus(&pairs, &cfg, None).unwrap();
        pairs.rotate_left(rot);
        pairs.swap(0, 3);
        let permuted = evaluate_corpus(&pairs, &cfg, None).unwrap();
        prop_assert_eq!(base.report, permuted.report);
        prop_assert_eq!(base.rows, permuted.rows);
    }
}
