//! Waveform-domain speech enhancement GAN toolkit.

pub mod audio;
pub mod experiments;
pub mod metrics;
pub mod segan;
pub mod synth;
pub mod tensorgrad;
