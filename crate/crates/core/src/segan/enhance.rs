use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::checkpoint::ModelCheckpoint;
use super::model::{generator_forward, sample_z};
use super::SeganError;
use crate::audio::{chunk_signal, reconstruct, AudioClip, Chunk, SAMPLE_RATE};
use crate::tensorgrad::Tensor;

/// Windows passed through the generator per forward call.
const ENHANCE_BATCH: usize = 16;

/// Preemphasis, zero-overlap windowing, one generator pass per window with
/// a fresh seeded `z`, reassembly and deemphasis. Output length equals
/// input length.
pub fn enhance(clip: &AudioClip, ckpt: &ModelCheckpoint, seed: u64) -> Result<AudioClip, SeganError> {
    if clip.sample_rate_hz != SAMPLE_RATE {
        return Err(SeganError::Config(format!("{}: sample rate {} Hz, expected {SAMPLE_RATE}", clip.utterance_id, clip.sample_rate_hz)));
    }
    if clip.is_empty() {
        return Ok(clip.clone());
    }
    let cfg = &ckpt.generator;
    let w = cfg.window_len;
    let pre = clip.preemphasis(cfg.preemphasis)?;
    let mut chunks = chunk_signal(&pre, w, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for group in chunks.chunks_mut(ENHANCE_BATCH) {
        let b = group.len();
        let x = Tensor::new(vec![b, 1, w], group.iter().flat_map(|c| c.samples.iter().copied()).collect())?;
        let z = sample_z(&mut rng, b, cfg.z_dims());
        let y = generator_forward(cfg, &ckpt.g_params, &x, &z)?;
        for (c, out) in group.iter_mut().zip(y.data().chunks_exact(w)) {
            c.samples.copy_from_slice(out);
        }
    }
    let samples = reconstruct(&chunks);
    debug_assert_eq!(samples.len(), clip.len());
    Ok(clip.with_samples(samples).deemphasis(cfg.preemphasis)?)
}

/// Enhances preemphasized windows directly; used for quick training-set probes.
pub fn enhance_chunks(chunks: &[Chunk], ckpt: &ModelCheckpoint, seed: u64) -> Result<Vec<Vec<f32>>, SeganError> {
    let cfg = &ckpt.generator;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(chunks.len());
    for group in chunks.chunks(ENHANCE_BATCH) {
        let x = Tensor::new(vec![group.len(), 1, cfg.window_len], group.iter().flat_map(|c| c.samples.iter().copied()).collect())?;
        let z = sample_z(&mut rng, group.len(), cfg.z_dims());
        let y = generator_forward(cfg, &ckpt.g_params, &x, &z)?;
        out.extend(y.data().chunks_exact(cfg.window_len).map(|s| s.to_vec()));
    }
    Ok(out)
}
