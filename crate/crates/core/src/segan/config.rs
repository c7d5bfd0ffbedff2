use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::SeganError;

fn default_kernel() -> usize {
    31
}

fn default_stride() -> usize {
    2
}

fn default_preemphasis() -> f32 {
    0.95
}

/// Encoder-decoder generator geometry. The decoder mirrors the encoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub window_len: usize,
    #[serde(default = "default_kernel")]
    pub kernel_width: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Output channels of each encoder layer.
    pub encoder_channels: Vec<usize>,
    #[serde(default = "default_preemphasis")]
    pub preemphasis: f32,
}

impl GeneratorConfig {
    /// W=16384, 11 layers, 16 → 1024 channels.
    pub fn canonical() -> Self {
        Self {
            window_len: 16384,
            kernel_width: 31,
            stride: 2,
            encoder_channels: vec![16, 32, 32, 64, 64, 128, 128, 256, 256, 512, 1024],
            preemphasis: 0.95,
        }
    }

    /// W=1024, 6 layers.
    pub fn desk() -> Self {
        Self {
            window_len: 1024,
            kernel_width: 31,
            stride: 2,
            encoder_channels: vec![16, 32, 32, 64, 64, 128],
            preemphasis: 0.95,
        }
    }

    pub fn n_layers(&self) -> usize {
        self.encoder_channels.len()
    }

    pub fn pad(&self) -> usize {
        (self.kernel_width - 1) / 2
    }

    pub fn latent_len(&self) -> usize {
        self.window_len / self.stride.pow(self.n_layers() as u32)
    }

    /// `(channels, length)` of both `c` and `z`.
    pub fn z_dims(&self) -> (usize, usize) {
        (*self.encoder_channels.last().unwrap_or(&0), self.latent_len())
    }

    /// Input channels of decoder layer `i`: twice the channels of the
    /// encoder layer it mirrors.
    pub fn decoder_in_channels(&self, i: usize) -> usize {
        2 * self.encoder_channels[self.n_layers() - 1 - i]
    }

    pub fn decoder_out_channels(&self, i: usize) -> usize {
        let n = self.n_layers();
        if i + 1 == n {
            1
        } else {
            self.encoder_channels[n - 2 - i]
        }
    }

    pub fn validate(&self) -> Result<(), SeganError> {
        if self.encoder_channels.is_empty() || self.encoder_channels.contains(&0) {
            return Err(SeganError::Config("encoder_channels must be non-empty and positive".into()));
        }
        if self.stride < 2 || self.kernel_width % 2 == 0 || self.kernel_width < self.stride {
            return Err(SeganError::Config(format!(
                "kernel_width {} / stride {} unsupported (odd kernel ≥ stride ≥ 2 required)",
                self.kernel_width, self.stride
            )));
        }
        let total = self.stride.checked_pow(self.n_layers() as u32).unwrap_or(usize::MAX);
        if self.window_len == 0 || self.window_len % total != 0 {
            return Err(SeganError::Config(format!(
                "window_len {} not divisible by stride^layers = {total}",
                self.window_len
            )));
        }
        if !(0.0..1.0).contains(&self.preemphasis) {
            return Err(SeganError::Config(format!("preemphasis {} outside [0, 1)", self.preemphasis)));
        }
        Ok(())
    }
}

fn default_slope() -> f32 {
    0.3
}

/// Conditioned discriminator: strided conv stack over the two-channel
/// (candidate ‖ noisy) input, a width-1 conv, then a linear reduction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorConfig {
    pub window_len: usize,
    #[serde(default = "default_kernel")]
    pub kernel_width: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
    pub channels: Vec<usize>,
    #[serde(default = "default_slope")]
    pub leaky_slope: f32,
}

impl DiscriminatorConfig {
    pub fn canonical() -> Self {
        Self {
            window_len: 16384,
            kernel_width: 31,
            stride: 2,
            channels: vec![16, 32, 32, 64, 64, 128, 128, 256, 256, 512, 1024],
            leaky_slope: 0.3,
        }
    }

    /// Half-width stack so adversarial steps stay cheap next to the generator.
    pub fn desk() -> Self {
        Self {
            window_len: 1024,
            kernel_width: 31,
            stride: 2,
            channels: vec![8, 16, 16, 32, 32, 64],
            leaky_slope: 0.3,
        }
    }

    pub fn pad(&self) -> usize {
        (self.kernel_width - 1) / 2
    }

    /// Length of the feature map entering the linear layer.
    pub fn final_len(&self) -> usize {
        self.window_len / self.stride.pow(self.channels.len() as u32)
    }

    pub fn validate(&self) -> Result<(), SeganError> {
        if self.channels.is_empty() || self.channels.contains(&0) {
            return Err(SeganError::Config("discriminator channels must be non-empty and positive".into()));
        }
        if self.stride < 2 || self.kernel_width % 2 == 0 || self.kernel_width < self.stride {
            return Err(SeganError::Config("discriminator kernel/stride unsupported".into()));
        }
        let total = self.stride.checked_pow(self.channels.len() as u32).unwrap_or(usize::MAX);
        if self.window_len == 0 || self.window_len % total != 0 {
            return Err(SeganError::Config(format!(
                "discriminator window_len {} not divisible by {total}",
                self.window_len
            )));
        }
        Ok(())
    }
}

/// A named pair of generator and discriminator presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub generator: GeneratorConfig,
    pub discriminator: DiscriminatorConfig,
}

impl ModelProfile {
    pub fn canonical() -> Self {
        Self { generator: GeneratorConfig::canonical(), discriminator: DiscriminatorConfig::canonical() }
    }

    pub fn desk() -> Self {
        Self { generator: GeneratorConfig::desk(), discriminator: DiscriminatorConfig::desk() }
    }

    pub fn by_name(name: &str) -> Result<Self, SeganError> {
        match name {
            "canonical" => Ok(Self::canonical()),
            "desk" => Ok(Self::desk()),
            other => Err(SeganError::Config(format!("unknown model profile '{other}' (expected canonical or desk)"))),
        }
    }

    pub fn validate(&self) -> Result<(), SeganError> {
        self.generator.validate()?;
        self.discriminator.validate()?;
        if self.generator.window_len != self.discriminator.window_len {
            return Err(SeganError::Config("generator and discriminator window lengths differ".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    Scratch,
    Pretrained(PathBuf),
}

impl InitMode {
    pub fn label(&self) -> &'static str {
        match self {
            InitMode::Scratch => "scratch",
            InitMode::Pretrained(_) => "pretrained",
        }
    }
}

fn d_batch() -> usize {
    100
}
fn d_epochs() -> usize {
    30
}
fn d_lr() -> f64 {
    2e-4
}
fn d_decay() -> f64 {
    0.9
}
fn d_eps() -> f64 {
    1e-8
}
fn d_lambda() -> f64 {
    100.0
}
fn d_init() -> InitMode {
    InitMode::Scratch
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    #[serde(default = "d_epochs")]
    pub epochs: usize,
    #[serde(default = "d_lr")]
    pub lr: f64,
    #[serde(default = "d_decay")]
    pub rmsprop_decay: f64,
    #[serde(default = "d_eps")]
    pub eps: f64,
    #[serde(default = "d_lambda")]
    pub lambda_l1: f64,
    #[serde(default = "d_init")]
    pub init_mode: InitMode,
    #[serde(default)]
    pub freeze_discriminator: bool,
    #[serde(default)]
    pub seed: u64,
    /// Stops after this many optimizer steps even mid-epoch.
    #[serde(default)]
    pub max_steps: Option<usize>,
    /// Overlap between consecutive training windows.
    #[serde(default)]
    pub train_overlap: f64,
    /// Where per-epoch checkpoints and the loss log go; nothing is written when unset.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: d_batch(),
            epochs: d_epochs(),
            lr: d_lr(),
            rmsprop_decay: d_decay(),
            eps: d_eps(),
            lambda_l1: d_lambda(),
            init_mode: InitMode::Scratch,
            freeze_discriminator: false,
            seed: 0,
            max_steps: None,
            train_overlap: 0.0,
            out_dir: None,
        }
    }
}

impl TrainConfig {
    /// Pre-training length of the reference base model.
    pub const PRETRAIN_EPOCHS: usize = 86;

    pub fn validate(&self) -> Result<(), SeganError> {
        if self.batch_size == 0 {
            return Err(SeganError::Config("batch_size must be ≥ 1".into()));
        }
        if self.epochs == 0 {
            return Err(SeganError::Config("epochs must be ≥ 1".into()));
        }
        if !(self.lambda_l1 >= 0.0) {
            return Err(SeganError::Config("lambda_l1 must be ≥ 0".into()));
        }
        if !(self.lr >= 0.0) || !(0.0..1.0).contains(&self.rmsprop_decay) || !(self.eps > 0.0) {
            return Err(SeganError::Config("invalid optimizer settings".into()));
        }
        if !(0.0..1.0).contains(&self.train_overlap) {
            return Err(SeganError::Config("train_overlap must lie in [0, 1)".into()));
        }
        Ok(())
    }
}
