//! Synthetic stand-ins for speech and noise recordings: formant-shaped
//! harmonic speech per language and talker, and two disjoint noise families.

mod corpus;
mod dsp;
mod noise;
mod speech;

pub use corpus::{build_corpus, CorpusLayout, CorpusSpec, LanguageCorpus, LanguageSpec};
pub use noise::{synth_noise, NoiseKind};
pub use speech::{speakers, synth_speech_set, synth_utterance, SpeakerProfile, SpeechSetSpec};
