use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ExperimentError;
use crate::audio::ManifestRow;

/// Tolerance for comparing accumulated durations against the target.
const DURATION_SLACK_S: f64 = 1e-6;

/// Shuffles rows with the seed and takes utterances, whole, until their
/// cumulative duration reaches the target.
pub fn sample_training_subset(rows: &[ManifestRow], target_duration_s: f64, seed: u64) -> Result<Vec<ManifestRow>, ExperimentError> {
    let total: f64 = rows.iter().map(|r| r.duration_s).sum();
    if total + DURATION_SLACK_S < target_duration_s {
        return Err(ExperimentError::InsufficientData { needed_s: target_duration_s, available_s: total });
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = Vec::new();
    let mut acc = 0.0;
    for i in order {
        if acc + DURATION_SLACK_S >= target_duration_s {
            break;
        }
        acc += rows[i].duration_s;
        out.push(rows[i].clone());
    }
    Ok(out)
}

/// Draws `count` distinct types in seed-determined order.
pub fn sample_noise_types(all_types: &[String], count: usize, seed: u64) -> Result<Vec<String>, ExperimentError> {
    if count == 0 || count > all_types.len() {
        return Err(ExperimentError::Plan(format!("noise count {count} outside 1..={}", all_types.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(all_types.choose_multiple(&mut rng, count).cloned().collect())
}
