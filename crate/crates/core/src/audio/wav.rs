use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{AudioClip, AudioError, SAMPLE_RATE};

/// Reads a 16 kHz RIFF/WAVE file as a mono clip in `[-1, 1]`.
///
/// 16-bit PCM is scaled by `1/32768`; IEEE float is taken as-is. For
/// multichannel files only channel 0 is kept.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip, AudioError> {
    let path = path.as_ref();
    let malformed = |source| AudioError::Malformed { path: path.to_path_buf(), source };
    let reader = WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => AudioError::Io(io),
        hound::Error::Unsupported => AudioError::UnsupportedCodec { path: path.to_path_buf(), detail: "unsupported format".into() },
        other => malformed(other),
    })?;
    let spec = reader.spec();
    if spec.sample_rate != SAMPLE_RATE {
        return Err(AudioError::SampleRate { path: path.to_path_buf(), rate: spec.sample_rate });
    }
    let channels = spec.channels.max(1) as usize;
    if channels > 1 {
        log::warn!("{}: {channels} channels, keeping channel 0", path.display());
    }
    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f32 / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(malformed)?,
        (SampleFormat::Float, 32) => reader.into_samples::<f32>().collect::<Result<_, _>>().map_err(malformed)?,
        (fmt, bits) => {
            return Err(AudioError::UnsupportedCodec { path: path.to_path_buf(), detail: format!("{fmt:?} with {bits} bits per sample") })
        }
    };
    let samples: Vec<f32> = interleaved.into_iter().step_by(channels).collect();
    if samples.is_empty() {
        return Err(AudioError::EmptyClip(path.display().to_string()));
    }
    if let Some(bad) = samples.iter().position(|v| !v.is_finite()) {
        return Err(AudioError::InvalidArgument(format!("{}: non-finite sample at index {bad}", path.display())));
    }
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(AudioClip::new(samples).with_id(stem))
}

/// Writes a clip as 16-bit PCM mono. Samples are rounded to the nearest step
/// of `1/32768` and saturated to `[-32768, 32767]`.
pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<(), AudioError> {
    let path = path.as_ref();
    if clip.is_empty() {
        return Err(AudioError::EmptyClip(clip.utterance_id.clone()));
    }
    let spec = WavSpec { channels: 1, sample_rate: clip.sample_rate_hz, bits_per_sample: 16, sample_format: SampleFormat::Int };
    let wrap = |e: hound::Error| match e {
        hound::Error::IoError(io) => AudioError::Io(io),
        other => AudioError::Malformed { path: path.to_path_buf(), source: other },
    };
    let mut writer = WavWriter::create(path, spec).map_err(wrap)?;
    for &s in &clip.samples {
        writer.write_sample(quantize(s)).map_err(wrap)?;
    }
    writer.finalize().map_err(wrap)
}

fn quantize(s: f32) -> i16 {
    (s as f64 * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn write_raw(path: &Path, rate: u32, channels: u16, frames: &[i16]) {
        let spec = WavSpec { channels, sample_rate: rate, bits_per_sample: 16, sample_format: SampleFormat::Int };
        let mut w = WavWriter::create(path, spec).unwrap();
        for &f in frames {
            w.write_sample(f).unwrap();
        }
        w.finalize().unwrap();
    }

    #[test]
    fn constant_pcm_scales_to_half() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.wav");
        write_raw(&p, 16000, 1, &vec![16384; 16000]);
        let clip = load_wav(&p).unwrap();
        assert_eq!(clip.len(), 16000);
        assert!(clip.samples.iter().all(|&v| v == 0.5));
        assert_eq!(clip.utterance_id, "c");
    }

    #[test]
    fn empty_data_chunk_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.wav");
        write_raw(&p, 16000, 1, &[]);
        assert!(matches!(load_wav(&p), Err(AudioError::EmptyClip(_))));
    }

    #[test]
    fn other_rates_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("hi.wav");
        write_raw(&p, 48000, 1, &[1, 2, 3]);
        let err = load_wav(&p).unwrap_err();
        assert!(matches!(err, AudioError::SampleRate { rate: 48000, .. }));
        assert!(err.to_string().contains("48000"));
    }

    #[test]
    fn multichannel_keeps_first_channel() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("st.wav");
        write_raw(&p, 16000, 2, &[100, -5, 200, -5, 300, -5]);
        let clip = load_wav(&p).unwrap();
        assert_eq!(clip.samples, vec![100.0 / 32768.0, 200.0 / 32768.0, 300.0 / 32768.0]);
    }

    #[test]
    fn float_wav_is_read() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.wav");
        let spec = WavSpec { channels: 1, sample_rate: 16000, bits_per_sample: 32, sample_format: SampleFormat::Float };
        let mut w = WavWriter::create(&p, spec).unwrap();
        for v in [0.25f32, -0.75] {
            w.write_sample(v).unwrap();
        }
        w.finalize().unwrap();
        assert_eq!(load_wav(&p).unwrap().samples, vec![0.25, -0.75]);
    }

    #[test]
    fn garbage_header_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.wav");
        std::fs::write(&p, b"RIFF\x10\x00\x00\x00WAVEjunkjunk").unwrap();
        assert!(matches!(load_wav(&p), Err(AudioError::Malformed { .. } | AudioError::Io(_))));
    }

    #[test]
    fn round_trip_within_one_step() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.wav");
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let clip = AudioClip::new((0..5000).map(|_| rng.gen_range(-1.0f32..=1.0)).collect());
        write_wav(&clip, &p).unwrap();
        let back = load_wav(&p).unwrap();
        let err = clip.samples.iter().zip(&back.samples).map(|(a, b)| (a - b).abs()).fold(0.0, f32::max);
        assert!(err <= 1.0 / 32768.0, "{err}");
    }

    #[test]
    fn full_scale_saturates_without_wraparound() {
        assert_eq!(quantize(1.0), 32767);
        assert_eq!(quantize(-1.0), -32768);
        assert_eq!(quantize(1.5), 32767);
    }

    #[test]
    fn empty_clip_is_not_written() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(write_wav(&AudioClip::new(vec![]), dir.path().join("x.wav")), Err(AudioError::EmptyClip(_))));
    }
}
