use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{synth_noise, synth_speech_set, NoiseKind, SpeechSetSpec};
use crate::audio::{mix_grid, write_manifest, write_wav, AudioClip, AudioError, ManifestRow, SAMPLE_RATE};
use crate::experiments::seeds::derive;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanguageSpec {
    pub language: String,
    pub train_speakers: usize,
    pub train_utterances_per_speaker: usize,
    pub test_speakers: usize,
    pub test_utterances_per_speaker: usize,
}

/// Layout of a synthetic corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub languages: Vec<LanguageSpec>,
    pub min_duration_s: f64,
    pub max_duration_s: f64,
    pub noise_duration_s: f64,
    pub train_snrs_db: Vec<f64>,
    pub test_snrs_db: Vec<f64>,
    pub seed: u64,
}

impl CorpusSpec {
    /// Roughly 12 minutes of training speech per language, 20 test utterances.
    pub fn desk(languages: &[&str], seed: u64) -> Self {
        Self {
            languages: languages
                .iter()
                .map(|l| LanguageSpec {
                    language: l.to_string(),
                    train_speakers: 10,
                    train_utterances_per_speaker: 30,
                    test_speakers: 2,
                    test_utterances_per_speaker: 10,
                })
                .collect(),
            min_duration_s: 2.0,
            max_duration_s: 3.0,
            noise_duration_s: 30.0,
            train_snrs_db: vec![15.0, 10.0, 5.0, 0.0],
            test_snrs_db: vec![17.5, 12.5, 7.5, 2.5],
            seed,
        }
    }
}

/// Manifests written for one language.
#[derive(Clone, Debug, PartialEq)]
pub struct LanguageCorpus {
    pub language: String,
    /// Training speakers mixed with the training noise family.
    pub train_a: PathBuf,
    /// Training speakers mixed with the held-out family (separate recordings from the test ones).
    pub train_b: PathBuf,
    /// Test speakers mixed with the held-out family.
    pub test_b: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusLayout {
    pub root: PathBuf,
    pub noise_train_dir: PathBuf,
    pub languages: Vec<LanguageCorpus>,
}

impl CorpusLayout {
    pub fn language(&self, name: &str) -> Option<&LanguageCorpus> {
        self.languages.iter().find(|l| l.language == name)
    }
}

fn write_set(clips: &[AudioClip], dir: &Path) -> Result<Vec<(PathBuf, AudioClip)>, AudioError> {
    std::fs::create_dir_all(dir)?;
    clips
        .iter()
        .map(|c| {
            let path = dir.join(format!("{}.wav", c.utterance_id));
            write_wav(c, &path)?;
            Ok((path, c.clone()))
        })
        .collect()
}

fn noise_set(kinds: &[NoiseKind], seconds: f64, seed: u64, dir: &Path) -> Result<Vec<AudioClip>, AudioError> {
    std::fs::create_dir_all(dir)?;
    let n = (seconds * SAMPLE_RATE as f64) as usize;
    kinds
        .iter()
        .map(|&k| {
            let clip = synth_noise(k, n, seed);
            write_wav(&clip, dir.join(format!("{}.wav", k.name())))?;
            Ok(clip)
        })
        .collect()
}

fn grid(clean: &[(PathBuf, AudioClip)], noises: &[AudioClip], snrs: &[f64], seed: u64, dir: &Path, manifest: &Path) -> Result<Vec<ManifestRow>, AudioError> {
    let out = mix_grid(clean, noises, snrs, seed, dir)?;
    if let Some((id, e)) = out.failures.first() {
        return Err(AudioError::InvalidArgument(format!("{id}: {e}")));
    }
    write_manifest(&out.rows, manifest)?;
    Ok(out.rows)
}

/// Renders speech, both noise families and the mixture grids under `root`:
/// `clean/<lang>/{train,test}`, `noise/{train,heldout_train,heldout_test}`,
/// `mixed/<lang>/…` and `<lang>_{train_a,train_b,test_b}.tsv`.
pub fn build_corpus(spec: &CorpusSpec, root: &Path) -> Result<CorpusLayout, AudioError> {
    std::fs::create_dir_all(root)?;
    let noise_train_dir = root.join("noise/train");
    let fam_a = noise_set(NoiseKind::family_a(), spec.noise_duration_s, derive(spec.seed, 1), &noise_train_dir)?;
    let fam_b_train = noise_set(NoiseKind::family_b(), spec.noise_duration_s, derive(spec.seed, 2), &root.join("noise/heldout_train"))?;
    let fam_b_test = noise_set(NoiseKind::family_b(), spec.noise_duration_s, derive(spec.seed, 3), &root.join("noise/heldout_test"))?;
    let mut languages = Vec::new();
    for (li, lang) in spec.languages.iter().enumerate() {
        let set = |prefix: &str, speakers: usize, utts: usize, stream: u64| SpeechSetSpec {
            language: lang.language.clone(),
            speaker_prefix: prefix.into(),
            n_speakers: speakers,
            utterances_per_speaker: utts,
            min_duration_s: spec.min_duration_s,
            max_duration_s: spec.max_duration_s,
            seed: derive(spec.seed, 100 + 10 * li as u64 + stream),
        };
        let l = &lang.language;
        let train = write_set(&synth_speech_set(&set("s", lang.train_speakers, lang.train_utterances_per_speaker, 0)), &root.join(format!("clean/{l}/train")))?;
        let test = write_set(&synth_speech_set(&set("t", lang.test_speakers, lang.test_utterances_per_speaker, 1)), &root.join(format!("clean/{l}/test")))?;
        let corpus = LanguageCorpus {
            language: l.clone(),
            train_a: root.join(format!("{l}_train_a.tsv")),
            train_b: root.join(format!("{l}_train_b.tsv")),
            test_b: root.join(format!("{l}_test_b.tsv")),
        };
        let mseed = |k: u64| derive(spec.seed, 200 + 10 * li as u64 + k);
        grid(&train, &fam_a, &spec.train_snrs_db, mseed(0), &root.join(format!("mixed/{l}/train_a")), &corpus.train_a)?;
        grid(&train, &fam_b_train, &spec.train_snrs_db, mseed(1), &root.join(format!("mixed/{l}/train_b")), &corpus.train_b)?;
        grid(&test, &fam_b_test, &spec.test_snrs_db, mseed(2), &root.join(format!("mixed/{l}/test_b")), &corpus.test_b)?;
        languages.push(corpus);
    }
    Ok(CorpusLayout { root: root.to_path_buf(), noise_train_dir, languages })
}
