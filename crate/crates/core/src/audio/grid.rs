use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{mix_at_snr, write_wav, AudioClip, AudioError, ManifestRow};

/// Rows written plus utterances that could not be mixed.
#[derive(Clone, Debug, Default)]
pub struct GridOutput {
    pub rows: Vec<ManifestRow>,
    pub failures: Vec<(String, String)>,
}

/// All `(noise, snr)` conditions, noise-major.
pub fn conditions(noises: &[AudioClip], snrs: &[f64]) -> Vec<(usize, f64)> {
    (0..noises.len()).flat_map(|n| snrs.iter().map(move |&s| (n, s))).collect()
}

/// Assigns conditions round-robin (utterance `i` gets condition
/// `i mod n_conditions`), mixes, and writes `<utt>__<noise>__<snr>.wav`
/// under `out_dir`. Noise types are taken from the noise clips' ids.
pub fn mix_grid(clean: &[(PathBuf, AudioClip)], noises: &[AudioClip], snrs: &[f64], seed: u64, out_dir: &Path) -> Result<GridOutput, AudioError> {
    let conds = conditions(noises, snrs);
    if conds.is_empty() {
        return Err(AudioError::InvalidArgument("no noise conditions".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GridOutput::default();
    for (i, (clean_path, clip)) in clean.iter().enumerate() {
        let (ni, snr) = conds[i % conds.len()];
        let noise = &noises[ni];
        let mix_seed: u64 = rng.gen();
        let mixture = match mix_at_snr(clip, noise, snr, mix_seed) {
            Ok(m) => m,
            Err(e) => {
                log::warn!("{}: {e}", clip.utterance_id);
                out.failures.push((clip.utterance_id.clone(), e.to_string()));
                continue;
            }
        };
        let mixed_path = out_dir.join(format!("{}__{}__{}.wav", clip.utterance_id, noise.utterance_id, snr));
        write_wav(&mixture.clip, &mixed_path)?;
        out.rows.push(ManifestRow {
            utterance_id: clip.utterance_id.clone(),
            speaker_id: clip.speaker_id.clone(),
            language: clip.language.clone(),
            clean_path: clean_path.clone(),
            noise_type: noise.utterance_id.clone(),
            snr_db: snr,
            mixed_path,
            duration_s: clip.duration_s(),
        });
    }
    Ok(out)
}
