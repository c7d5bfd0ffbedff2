//! Counter-based seed derivation: `seed = mix(master + counter·γ)`, where
//! `mix` is the splitmix64 finalizer. For a fixed master seed, distinct
//! counters give distinct seeds because both steps are bijections on u64.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

const RUN_STREAM: u64 = 0;
const DATA_STREAM: u64 = 1 << 40;
const NOISE_STREAM: u64 = 2 << 40;
const MIX_STREAM: u64 = 3 << 40;

pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(master: u64, counter: u64) -> u64 {
    splitmix64(master.wrapping_add(counter.wrapping_mul(GAMMA)))
}

/// Training seed of the `index`-th planned run.
pub fn run_seed(master: u64, index: usize) -> u64 {
    derive(master, RUN_STREAM + 1 + index as u64)
}

fn cell(axis_index: usize, repeat: usize) -> u64 {
    ((axis_index as u64) << 20) | repeat as u64
}

/// Utterance-selection seed; shared by every init mode of one cell so the
/// modes are compared on identical data.
pub fn data_seed(master: u64, axis_index: usize, repeat: usize) -> u64 {
    derive(master, DATA_STREAM + cell(axis_index, repeat))
}

pub fn noise_seed(master: u64, axis_index: usize, repeat: usize) -> u64 {
    derive(master, NOISE_STREAM + cell(axis_index, repeat))
}

pub fn mix_seed(master: u64, axis_index: usize, repeat: usize) -> u64 {
    derive(master, MIX_STREAM + cell(axis_index, repeat))
}
