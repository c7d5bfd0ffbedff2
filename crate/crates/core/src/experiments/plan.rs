use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::seeds::{data_seed, run_seed};
use super::ExperimentError;
use crate::segan::{ModelProfile, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Preeng,
    Scratch,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Preeng => "preeng",
            Mode::Scratch => "scratch",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "preeng" => Some(Mode::Preeng),
            "scratch" => Some(Mode::Scratch),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Exp1,
    Exp2,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Exp1 => "exp1",
            ExperimentKind::Exp2 => "exp2",
        }
    }

    pub fn axis_label(self) -> &'static str {
        match self {
            ExperimentKind::Exp1 => "training speech (s)",
            ExperimentKind::Exp2 => "training noise types",
        }
    }
}

/// Corpus inputs. Relative paths resolve against the plan file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub train_manifest: PathBuf,
    pub test_manifest: PathBuf,
    #[serde(default)]
    pub base_checkpoint: Option<PathBuf>,
    /// Directory of `<noise_type>.wav` files; Experiment 2 mixes from it.
    #[serde(default)]
    pub noise_dir: Option<PathBuf>,
}

impl DataPaths {
    fn resolve(&mut self, root: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = root.join(&*p);
            }
        };
        fix(&mut self.train_manifest);
        fix(&mut self.test_manifest);
        if let Some(p) = self.base_checkpoint.as_mut() {
            fix(p);
        }
        if let Some(p) = self.noise_dir.as_mut() {
            fix(p);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSettings {
    #[serde(default)]
    pub enhance_seed: u64,
    /// Command template with `{clean}` and `{degraded}` placeholders; PESQ columns stay empty when unset.
    #[serde(default)]
    pub pesq_command: Option<String>,
    #[serde(default)]
    pub pesq_pattern: Option<String>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self { enhance_seed: 0, pesq_command: None, pesq_pattern: None }
    }
}

fn default_modes() -> Vec<Mode> {
    vec![Mode::Preeng, Mode::Scratch]
}

fn default_profile() -> String {
    "desk".into()
}

fn default_snrs() -> Vec<f64> {
    vec![15.0, 10.0, 5.0, 0.0]
}

fn default_fail_fraction() -> f64 {
    0.2
}

/// Settings shared by both experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanSettings {
    pub name: String,
    pub master_seed: u64,
    #[serde(default = "default_profile")]
    pub profile: String,
    #[serde(default = "default_modes")]
    pub init_modes: Vec<Mode>,
    #[serde(default)]
    pub data: DataPaths,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub eval: EvalSettings,
    /// Fill the wall_s column of results.csv (breaks byte-for-byte reruns).
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default)]
    pub keep_checkpoints: bool,
    #[serde(default = "default_fail_fraction")]
    pub max_failure_fraction: f64,
}

impl PlanSettings {
    pub fn model_profile(&self) -> Result<ModelProfile, ExperimentError> {
        Ok(ModelProfile::by_name(&self.profile)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exp1Plan {
    #[serde(flatten)]
    pub settings: PlanSettings,
    pub durations_s: Vec<f64>,
    /// One entry per duration.
    pub repeats: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exp2Plan {
    #[serde(flatten)]
    pub settings: PlanSettings,
    pub noise_counts: Vec<usize>,
    pub runs_per_count: usize,
    pub fixed_duration_s: f64,
    /// Training noise pool; file stems under `data.noise_dir`.
    pub noise_types: Vec<String>,
    #[serde(default = "default_snrs")]
    pub snrs_db: Vec<f64>,
}

/// Repeats per full-scale duration: ten for the three shortest, five otherwise.
pub const FULL_DURATIONS_S: [f64; 9] = [24.0, 60.0, 120.0, 240.0, 600.0, 1200.0, 3000.0, 6000.0, 12000.0];

pub fn full_repeats(duration_s: f64) -> usize {
    if [24.0, 60.0, 120.0].contains(&duration_s) {
        10
    } else {
        5
    }
}

fn base_settings(name: &str, master_seed: u64, profile: &str) -> PlanSettings {
    PlanSettings {
        name: name.into(),
        master_seed,
        profile: profile.into(),
        init_modes: default_modes(),
        data: DataPaths::default(),
        train: TrainConfig::default(),
        eval: EvalSettings::default(),
        record_wall_time: false,
        keep_checkpoints: false,
        max_failure_fraction: 0.2,
    }
}

impl Exp1Plan {
    pub fn full(master_seed: u64) -> Self {
        Self {
            settings: base_settings("exp1_full", master_seed, "canonical"),
            durations_s: FULL_DURATIONS_S.to_vec(),
            repeats: FULL_DURATIONS_S.iter().map(|&d| full_repeats(d)).collect(),
        }
    }

    pub fn desk(master_seed: u64) -> Self {
        Self {
            settings: base_settings("exp1_desk", master_seed, "desk"),
            durations_s: vec![24.0, 60.0, 120.0, 600.0],
            repeats: vec![3, 3, 3, 2],
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        validate_settings(&self.settings)?;
        if self.durations_s.is_empty() || self.durations_s.len() != self.repeats.len() {
            return Err(ExperimentError::Plan("durations_s and repeats must be non-empty and of equal length".into()));
        }
        if self.durations_s.iter().any(|d| !(*d > 0.0)) || self.repeats.contains(&0) {
            return Err(ExperimentError::Plan("durations must be positive and repeats ≥ 1".into()));
        }
        Ok(())
    }

    pub fn runs(&self) -> Vec<PlannedRun> {
        let cells: Vec<(f64, usize)> = self.durations_s.iter().copied().zip(self.repeats.iter().copied()).collect();
        enumerate(ExperimentKind::Exp1, &self.settings, &cells)
    }
}

impl Exp2Plan {
    pub fn full(master_seed: u64) -> Self {
        Self {
            settings: base_settings("exp2_full", master_seed, "canonical"),
            noise_counts: (1..=10).collect(),
            runs_per_count: 5,
            fixed_duration_s: 1200.0,
            noise_types: crate::synth::NoiseKind::family_a().iter().map(|k| k.name().to_string()).collect(),
            snrs_db: default_snrs(),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        validate_settings(&self.settings)?;
        if self.noise_counts.is_empty() || self.runs_per_count == 0 || !(self.fixed_duration_s > 0.0) {
            return Err(ExperimentError::Plan("noise_counts, runs_per_count and fixed_duration_s must be positive".into()));
        }
        if let Some(&k) = self.noise_counts.iter().find(|&&k| k == 0 || k > self.noise_types.len()) {
            return Err(ExperimentError::Plan(format!("noise count {k} outside 1..={}", self.noise_types.len())));
        }
        if self.snrs_db.is_empty() {
            return Err(ExperimentError::Plan("snrs_db is empty".into()));
        }
        Ok(())
    }

    pub fn runs(&self) -> Vec<PlannedRun> {
        let cells: Vec<(f64, usize)> = self.noise_counts.iter().map(|&k| (k as f64, self.runs_per_count)).collect();
        enumerate(ExperimentKind::Exp2, &self.settings, &cells)
    }
}

fn validate_settings(s: &PlanSettings) -> Result<(), ExperimentError> {
    if s.init_modes.is_empty() {
        return Err(ExperimentError::Plan("init_modes is empty".into()));
    }
    let mut modes = s.init_modes.clone();
    modes.sort();
    modes.dedup();
    if modes.len() != s.init_modes.len() {
        return Err(ExperimentError::Plan("init_modes lists a mode twice".into()));
    }
    if !(0.0..=1.0).contains(&s.max_failure_fraction) {
        return Err(ExperimentError::Plan("max_failure_fraction must lie in [0, 1]".into()));
    }
    ModelProfile::by_name(&s.profile)?;
    s.train.validate()?;
    Ok(())
}

/// One planned training job.
#[derive(Clone, Debug, PartialEq)]
pub struct PlannedRun {
    pub index: usize,
    pub run_id: String,
    pub axis_index: usize,
    pub axis: f64,
    pub repeat: usize,
    pub mode: Mode,
    pub seed: u64,
    pub data_seed: u64,
}

fn enumerate(kind: ExperimentKind, s: &PlanSettings, cells: &[(f64, usize)]) -> Vec<PlannedRun> {
    let mut out = Vec::new();
    for (ai, &(axis, repeats)) in cells.iter().enumerate() {
        for repeat in 0..repeats {
            for &mode in &s.init_modes {
                let index = out.len();
                let axis_tag = match kind {
                    ExperimentKind::Exp1 => format!("d{axis}"),
                    ExperimentKind::Exp2 => format!("n{axis}"),
                };
                out.push(PlannedRun {
                    index,
                    run_id: format!("{}-{axis_tag}-r{repeat:02}-{}", kind.name(), mode.name()),
                    axis_index: ai,
                    axis,
                    repeat,
                    mode,
                    seed: run_seed(s.master_seed, index),
                    data_seed: data_seed(s.master_seed, ai, repeat),
                });
            }
        }
    }
    out
}

const SETTINGS_KEYS: &[&str] = &[
    "name",
    "master_seed",
    "profile",
    "init_modes",
    "data",
    "train",
    "eval",
    "record_wall_time",
    "keep_checkpoints",
    "max_failure_fraction",
];
pub(crate) const EXP1_KEYS: &[&str] = &["durations_s", "repeats"];
pub(crate) const EXP2_KEYS: &[&str] = &["noise_counts", "runs_per_count", "fixed_duration_s", "noise_types", "snrs_db"];

/// Parses plan text, rejecting top-level keys outside `SETTINGS_KEYS` and `extra`.
pub(crate) fn parse_plan<T: serde::de::DeserializeOwned>(text: &str, origin: &str, extra: &[&str]) -> Result<T, ExperimentError> {
    let table: toml::Table = text.parse().map_err(|e| ExperimentError::Plan(format!("{origin}: {e}")))?;
    if let Some(key) = table.keys().find(|k| !SETTINGS_KEYS.contains(&k.as_str()) && !extra.contains(&k.as_str())) {
        return Err(ExperimentError::Plan(format!("{origin}: unknown key `{key}`")));
    }
    // Flattened structs lose spans; parsing the shared settings alone first
    // makes errors inside [train], [data] and [eval] cite their line.
    toml::from_str::<PlanSettings>(text).map_err(|e| ExperimentError::Plan(format!("{origin}: {e}")))?;
    toml::from_str(text).map_err(|e| ExperimentError::Plan(format!("{origin}: {e}")))
}

fn plan_root(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Parses and validates Experiment 1 plan text; relative data paths resolve against `root`.
pub fn parse_exp1_plan(text: &str, origin: &str, root: &Path) -> Result<Exp1Plan, ExperimentError> {
    let mut plan: Exp1Plan = parse_plan(text, origin, EXP1_KEYS)?;
    plan.settings.data.resolve(root);
    plan.validate()?;
    Ok(plan)
}

pub fn parse_exp2_plan(text: &str, origin: &str, root: &Path) -> Result<Exp2Plan, ExperimentError> {
    let mut plan: Exp2Plan = parse_plan(text, origin, EXP2_KEYS)?;
    plan.settings.data.resolve(root);
    plan.validate()?;
    Ok(plan)
}

pub fn load_exp1_plan(path: &Path) -> Result<Exp1Plan, ExperimentError> {
    parse_exp1_plan(&std::fs::read_to_string(path)?, &path.display().to_string(), &plan_root(path))
}

pub fn load_exp2_plan(path: &Path) -> Result<Exp2Plan, ExperimentError> {
    parse_exp2_plan(&std::fs::read_to_string(path)?, &path.display().to_string(), &plan_root(path))
}
