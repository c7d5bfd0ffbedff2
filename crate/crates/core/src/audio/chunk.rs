use super::AudioClip;

/// A fixed-length analysis window cut from an utterance.
#[derive(Clone, Debug, PartialEq)]
pub struct Chunk {
    pub samples: Vec<f32>,
    pub source_utterance: String,
    pub offset: usize,
    /// Zero samples appended past the end of the source.
    pub padded_tail: usize,
}

/// Splits a clip into windows of `window_len` with hop
/// `window_len·(1 − overlap_fraction)`; the last window is zero padded.
///
/// Panics on `window_len == 0` or an overlap outside `[0, 1)`.
pub fn chunk_signal(clip: &AudioClip, window_len: usize, overlap_fraction: f64) -> Vec<Chunk> {
    assert!(window_len > 0, "window_len must be positive");
    assert!((0.0..1.0).contains(&overlap_fraction), "overlap_fraction must lie in [0, 1)");
    let hop = ((window_len as f64) * (1.0 - overlap_fraction)).round().max(1.0) as usize;
    let n = clip.samples.len();
    let mut chunks = Vec::new();
    if n == 0 {
        return chunks;
    }
    let mut offset = 0;
    loop {
        let end = (offset + window_len).min(n);
        let mut samples = clip.samples[offset.min(n)..end].to_vec();
        let padded_tail = window_len - samples.len();
        samples.resize(window_len, 0.0);
        chunks.push(Chunk { samples, source_utterance: clip.utterance_id.clone(), offset, padded_tail });
        if offset + window_len >= n {
            break;
        }
        offset += hop;
    }
    chunks
}

/// Inverse of `chunk_signal` at zero overlap: concatenates and drops padding.
pub fn reconstruct(chunks: &[Chunk]) -> Vec<f32> {
    chunks.iter().flat_map(|c| c.samples[..c.samples.len() - c.padded_tail].iter().copied()).collect()
}
