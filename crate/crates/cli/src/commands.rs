use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use seganforge::audio::{load_wav, mix_grid, read_manifest, write_manifest, write_wav, AudioClip, ManifestRow, NoiseCondition};
use seganforge::experiments::{
    emit_report, parse_exp1_plan, parse_exp2_plan, read_results, run_exp1, run_exp2, ExperimentKind, PlannedRun,
};
use seganforge::metrics::{evaluate_corpus, write_report_csv, EvalPair, MetricConfig, PesqAdapter};
use seganforge::segan::{enhance, finetune, load_checkpoint, prepare_pairs, train, InitMode, ModelProfile, TrainConfig, TrainingPair};
use seganforge::synth::{build_corpus, CorpusSpec, LanguageSpec};

use crate::config::{write_provenance, ConfigError, Loaded};

pub const MIX_KEYS: &str = "\
Config keys:
  clean_dir          directory of clean 16 kHz WAVs (required)
  noise_dir          directory of noise WAVs; file stem = noise type (required)
  snrs_db            training SNRs in dB [default: 15, 10, 5, 0]
  language           language tag written to the manifest [default: \"\"]
  seed               mixing seed [default: 0]
  test_clean_dir     clean WAVs of the test grid (optional)
  test_noise_dir     noise WAVs of the test grid (required with test_clean_dir)
  test_snrs_db       test SNRs in dB [default: 17.5, 12.5, 7.5, 2.5]
  allow_shared_noise allow noise types shared by train and test grids [default: false]

Writes train.tsv, train/*.wav, and test.tsv, test/*.wav when a test grid is
configured. Files that cannot be mixed are listed in failures.tsv.";

pub const TRAIN_KEYS: &str = "\
Config keys:
  profile                    model preset, \"desk\" or \"canonical\" [default: desk]
  train_manifest             manifest of (clean, mixed) pairs (required)
  train.batch_size           [default: 100]
  train.epochs               [default: 30]
  train.lr                   RMSprop learning rate [default: 0.0002]
  train.rmsprop_decay        [default: 0.9]
  train.eps                  [default: 1e-8]
  train.lambda_l1            weight of the L1 term [default: 100]
  train.init_mode            \"scratch\" or { pretrained = \"base.sgck\" } [default: scratch]
  train.freeze_discriminator [default: false]
  train.seed                 [default: 0]
  train.max_steps            optimizer step cap (optional)
  train.train_overlap        window overlap fraction in [0, 1) [default: 0]

Writes final.sgck, epoch_NNN.sgck and loss_log.csv.";

pub const FINETUNE_KEYS: &str = "\
Config keys:
  base_checkpoint  pre-trained checkpoint (required)
  train_manifest   manifest of (clean, mixed) pairs (required)
  train.*          as for `train`; the model profile comes from the checkpoint

Writes final.sgck, epoch_NNN.sgck and loss_log.csv.";

pub const ENHANCE_KEYS: &str = "\
Config keys:
  checkpoint  trained checkpoint (required)
  input       a WAV file or a directory of WAVs (required)
  seed        latent noise seed [default: 0]

Writes <stem>.enhanced.wav per input.";

pub const EVALUATE_KEYS: &str = "\
Config keys:
  manifest                manifest whose mixed files are scored against the clean ones (required)
  checkpoint              enhance the mixed files with this model first (optional)
  enhance_seed            [default: 0]
  pesq_command            PESQ adapter template with {clean} and {degraded} (optional)
  pesq_pattern            regex locating the score in the adapter output (optional)
  metrics.lpc_order       [default: 10]
  metrics.ssnr_clipped    clip frame SNRs to [-10, 35] dB [default: true]
  metrics.keep_fraction   fraction of best frames kept by LLR and WSS [default: 0.95]
  metrics.frame.*         frame length, hop and window

Writes report.csv and summary.json. Without a PESQ adapter the pesq, csig,
cbak and covl columns are empty.";

pub const EXP1_KEYS: &str = "\
Config keys:
  name, master_seed, profile, init_modes (\"preeng\", \"scratch\")
  durations_s            training speech per run, seconds
  repeats                runs per duration (one entry per duration)
  data.train_manifest    target-language training pool
  data.test_manifest     fixed test set
  data.base_checkpoint   pre-trained base (required for preeng)
  train.*                as for `train`
  eval.enhance_seed, eval.pesq_command, eval.pesq_pattern
  record_wall_time       fill wall_s in results.csv [default: false]
  keep_checkpoints       keep runs/<id>/model.sgck [default: false]
  max_failure_fraction   abort when more runs fail [default: 0.2]

Env: SEGANFORGE_JOBS sets the number of parallel runs.
Writes results.csv, aggregates.csv, per-run provenance and one SVG per metric.";

pub const EXP2_KEYS: &str = "\
Config keys:
  name, master_seed, profile, init_modes, data.*, train.*, eval.*,
  record_wall_time, keep_checkpoints, max_failure_fraction   as for exp1
  noise_counts       numbers of training noise types
  runs_per_count     runs per noise count
  fixed_duration_s   training speech per run, seconds
  noise_types        noise pool; stems of WAVs under data.noise_dir
  snrs_db            training SNRs in dB [default: 15, 10, 5, 0]
  data.noise_dir     directory of <noise_type>.wav (required)

Env: SEGANFORGE_JOBS sets the number of parallel runs.";

pub const REPORT_KEYS: &str = "\
Config keys:
  results_dir  directory holding results.csv (required)
  experiment   \"exp1\" or \"exp2\" [default: exp1]

Writes aggregates.csv, aggregates_by_noise.csv, baselines.csv and SVG charts.";

pub const SYNTH_KEYS: &str = "\
Config keys:
  languages                    [default: english, catalan]
  seed                         [default: 0]
  train_speakers               per language [default: 10]
  train_utterances_per_speaker [default: 30]
  test_speakers                [default: 2]
  test_utterances_per_speaker  [default: 10]
  min_duration_s, max_duration_s   utterance length range [default: 2, 3]
  noise_duration_s             length of each noise recording [default: 30]

Writes clean, noise and mixed WAVs plus <language>_{train_a,train_b,test_b}.tsv.";

fn load(p: &Path) -> Result<AudioClip> {
    load_wav(p).with_context(|| format!("loading {}", p.display()))
}

fn cfg_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn wav_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    files.sort();
    Ok(files)
}

fn train_snrs() -> Vec<f64> {
    vec![15.0, 10.0, 5.0, 0.0]
}

fn test_snrs() -> Vec<f64> {
    vec![17.5, 12.5, 7.5, 2.5]
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixConfig {
    pub clean_dir: PathBuf,
    pub noise_dir: PathBuf,
    #[serde(default = "train_snrs")]
    pub snrs_db: Vec<f64>,
    #[serde(default)]
    pub language: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub test_clean_dir: Option<PathBuf>,
    #[serde(default)]
    pub test_noise_dir: Option<PathBuf>,
    #[serde(default = "test_snrs")]
    pub test_snrs_db: Vec<f64>,
    #[serde(default)]
    pub allow_shared_noise: bool,
}

/// Loads every WAV in `dir`; unreadable files go to `failures`.
fn load_dir(dir: &Path, failures: &mut Vec<(String, String)>) -> Result<Vec<(PathBuf, AudioClip)>> {
    let mut out = Vec::new();
    for p in wav_files(dir)? {
        match load_wav(&p) {
            Ok(c) => out.push((p, c)),
            Err(e) => {
                log::warn!("{e}");
                failures.push((p.display().to_string(), e.to_string()));
            }
        }
    }
    Ok(out)
}

fn tag_clean(clips: &mut [(PathBuf, AudioClip)], language: &str) {
    for (_, c) in clips.iter_mut() {
        c.language = language.to_string();
        // `<speaker>_<utt>` naming; otherwise the speaker is the whole stem.
        c.speaker_id = c.utterance_id.rsplit_once('_').map(|(s, _)| s.to_string()).unwrap_or_else(|| c.utterance_id.clone());
    }
}

pub fn cmd_mix(loaded: &Loaded, out: &Path) -> Result<()> {
    let cfg: MixConfig = loaded.parse()?;
    write_provenance(out, "mix", &cfg, &[("seed", cfg.seed)])?;
    let mut failures = Vec::new();
    let mut grid = |clean_dir: &Path, noise_dir: &Path, snrs: &[f64], seed: u64, name: &str| -> Result<Vec<String>> {
        let clean_dir = loaded.resolve(clean_dir);
        let noise_dir = loaded.resolve(noise_dir);
        for d in [&clean_dir, &noise_dir] {
            if !d.is_dir() {
                bail!(cfg_err(format!("{} is not a directory", d.display())));
            }
        }
        let mut clean = load_dir(&clean_dir, &mut failures)?;
        tag_clean(&mut clean, &cfg.language);
        let noises: Vec<AudioClip> = load_dir(&noise_dir, &mut failures)?.into_iter().map(|(_, c)| c).collect();
        if clean.is_empty() || noises.is_empty() {
            bail!(cfg_err(format!("{name} grid: no usable clean or noise files")));
        }
        let mut res = mix_grid(&clean, &noises, snrs, seed, &out.join(name))?;
        failures.extend(res.failures);
        // Relative to the manifest, so reruns into another directory match byte for byte.
        for row in &mut res.rows {
            if let Ok(rel) = row.mixed_path.strip_prefix(out) {
                row.mixed_path = rel.to_path_buf();
            }
        }
        write_manifest(&res.rows, out.join(format!("{name}.tsv")))?;
        println!("{name}: {} rows", res.rows.len());
        Ok(noises.into_iter().map(|n| n.utterance_id).collect())
    };
    let train_noises = grid(&cfg.clean_dir, &cfg.noise_dir, &cfg.snrs_db, cfg.seed, "train")?;
    if let Some(tc) = &cfg.test_clean_dir {
        let tn = cfg.test_noise_dir.as_ref().ok_or_else(|| cfg_err("test_clean_dir requires test_noise_dir"))?;
        if !cfg.allow_shared_noise {
            let names: Vec<String> = wav_files(&loaded.resolve(tn))?
                .iter()
                .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
                .filter(|s| train_noises.contains(s))
                .collect();
            if !names.is_empty() {
                bail!(cfg_err(format!("noise types shared by train and test grids: {} (set allow_shared_noise)", names.join(", "))));
            }
        }
        grid(tc, tn, &cfg.test_snrs_db, cfg.seed.wrapping_add(1), "test")?;
    }
    let mut text = String::from("file\terror\n");
    for (f, e) in &failures {
        text.push_str(&format!("{f}\t{e}\n"));
    }
    std::fs::write(out.join("failures.tsv"), text)?;
    if !failures.is_empty() {
        eprintln!("{} files skipped, see failures.tsv", failures.len());
    }
    Ok(())
}

fn default_profile() -> String {
    "desk".into()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainCmdConfig {
    #[serde(default = "default_profile")]
    pub profile: String,
    pub train_manifest: PathBuf,
    #[serde(default)]
    pub train: TrainConfig,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinetuneCmdConfig {
    pub base_checkpoint: PathBuf,
    pub train_manifest: PathBuf,
    #[serde(default)]
    pub train: TrainConfig,
}

fn load_training_corpus(manifest: &Path, window_len: usize, cfg: &TrainConfig, preemphasis: f32) -> Result<Vec<TrainingPair>> {
    let rows = read_manifest(manifest).with_context(|| format!("reading {}", manifest.display()))?;
    let utts = rows
        .iter()
        .map(|r| Ok((load(&r.clean_path)?, load(&r.mixed_path)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(prepare_pairs(&utts, window_len, cfg.train_overlap, preemphasis)?)
}

pub fn cmd_train(loaded: &Loaded, out: &Path) -> Result<()> {
    let mut cfg: TrainCmdConfig = loaded.parse()?;
    cfg.train_manifest = loaded.resolve(&cfg.train_manifest);
    if let InitMode::Pretrained(p) = &cfg.train.init_mode {
        cfg.train.init_mode = InitMode::Pretrained(loaded.resolve(p));
    }
    write_provenance(out, "train", &cfg, &[("seed", cfg.train.seed)])?;
    cfg.train.out_dir = Some(out.to_path_buf());
    let profile = ModelProfile::by_name(&cfg.profile)?;
    let g = &profile.generator;
    let corpus = load_training_corpus(&cfg.train_manifest, g.window_len, &cfg.train, g.preemphasis)?;
    let outcome = train(&corpus, &profile, &cfg.train)?;
    report_outcome(&outcome.checkpoint.provenance, out);
    Ok(())
}

pub fn cmd_finetune(loaded: &Loaded, out: &Path) -> Result<()> {
    let mut cfg: FinetuneCmdConfig = loaded.parse()?;
    cfg.train_manifest = loaded.resolve(&cfg.train_manifest);
    cfg.base_checkpoint = loaded.resolve(&cfg.base_checkpoint);
    cfg.train.init_mode = InitMode::Pretrained(cfg.base_checkpoint.clone());
    write_provenance(out, "finetune", &cfg, &[("seed", cfg.train.seed)])?;
    cfg.train.out_dir = Some(out.to_path_buf());
    let base = load_checkpoint(&cfg.base_checkpoint)?;
    let g = base.generator.clone();
    let corpus = load_training_corpus(&cfg.train_manifest, g.window_len, &cfg.train, g.preemphasis)?;
    let outcome = finetune(&base, &corpus, &cfg.train)?;
    report_outcome(&outcome.checkpoint.provenance, out);
    Ok(())
}

fn report_outcome(p: &seganforge::segan::Provenance, out: &Path) {
    println!("trained {} steps over {} epochs; checkpoint {}", p.steps_completed, p.epochs_completed, out.join("final.sgck").display());
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnhanceConfig {
    pub checkpoint: PathBuf,
    pub input: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

pub fn cmd_enhance(loaded: &Loaded, out: &Path) -> Result<()> {
    let mut cfg: EnhanceConfig = loaded.parse()?;
    cfg.checkpoint = loaded.resolve(&cfg.checkpoint);
    cfg.input = loaded.resolve(&cfg.input);
    write_provenance(out, "enhance", &cfg, &[("seed", cfg.seed)])?;
    let ckpt = load_checkpoint(&cfg.checkpoint)?;
    let inputs = if cfg.input.is_dir() { wav_files(&cfg.input)? } else { vec![cfg.input.clone()] };
    if inputs.is_empty() {
        bail!(cfg_err(format!("no WAV files under {}", cfg.input.display())));
    }
    for p in &inputs {
        let clip = load(p)?;
        let enhanced = enhance(&clip, &ckpt, cfg.seed)?;
        let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        write_wav(&enhanced, out.join(format!("{stem}.enhanced.wav")))?;
    }
    println!("enhanced {} files", inputs.len());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    pub manifest: PathBuf,
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub enhance_seed: u64,
    #[serde(default)]
    pub pesq_command: Option<String>,
    #[serde(default)]
    pub pesq_pattern: Option<String>,
    #[serde(default)]
    pub metrics: MetricConfig,
}

fn eval_pair(row: &ManifestRow, degraded: AudioClip, clean: AudioClip, degraded_path: Option<PathBuf>) -> EvalPair {
    let mut degraded = degraded;
    degraded.condition = Some(NoiseCondition { noise_type: row.noise_type.clone(), snr_db: row.snr_db });
    let mut clean = clean;
    clean.utterance_id = row.utterance_id.clone();
    let mut p = EvalPair::new(clean, degraded);
    p.clean_path = Some(row.clean_path.clone());
    p.degraded_path = degraded_path;
    p
}

pub fn cmd_evaluate(loaded: &Loaded, out: &Path) -> Result<()> {
    let mut cfg: EvaluateConfig = loaded.parse()?;
    cfg.manifest = loaded.resolve(&cfg.manifest);
    cfg.checkpoint = cfg.checkpoint.as_deref().map(|p| loaded.resolve(p));
    write_provenance(out, "evaluate", &cfg, &[("enhance_seed", cfg.enhance_seed)])?;
    let ckpt = cfg.checkpoint.as_deref().map(load_checkpoint).transpose()?;
    let adapter = cfg.pesq_command.as_ref().map(|c| PesqAdapter { command: c.clone(), pattern: cfg.pesq_pattern.clone() });
    let mut pairs = Vec::new();
    for row in read_manifest(&cfg.manifest).with_context(|| format!("reading {}", cfg.manifest.display()))? {
        let clean = load(&row.clean_path)?;
        let noisy = load(&row.mixed_path)?;
        pairs.push(match &ckpt {
            Some(c) => eval_pair(&row, enhance(&noisy, c, cfg.enhance_seed)?, clean, None),
            None => {
                let path = Some(row.mixed_path.clone());
                eval_pair(&row, noisy, clean, path)
            }
        });
    }
    let eval = evaluate_corpus(&pairs, &cfg.metrics, adapter.as_ref())?;
    write_report_csv(&eval, &out.join("report.csv"))?;
    let summary = serde_json::json!({ "overall": eval.report, "by_noise_type": eval.by_noise_type });
    std::fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    let r = &eval.report;
    println!("{} utterances: ssnr {:.3} dB, llr {:.4}, wss {:.3}", r.n_utterances, r.ssnr, r.llr, r.wss);
    Ok(())
}

fn print_plan(runs: &[PlannedRun], out: Option<&Path>) -> Result<()> {
    let mut text = String::from("index\trun_id\taxis\trepeat\tmode\tseed\tdata_seed\n");
    for r in runs {
        text.push_str(&format!("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", r.index, r.run_id, r.axis, r.repeat, r.mode.name(), r.seed, r.data_seed));
    }
    print!("{text}");
    println!("planned runs: {}", runs.len());
    if let Some(out) = out {
        std::fs::write(out.join("plan.tsv"), text)?;
    }
    Ok(())
}

pub fn cmd_exp(loaded: &Loaded, kind: ExperimentKind, out: Option<&Path>, dry_run: bool) -> Result<()> {
    let (text, origin) = loaded.source()?;
    let origin = origin.as_str();
    let (runs, seed, exec): (Vec<PlannedRun>, u64, Box<dyn FnOnce(&Path) -> Result<usize>>) = match kind {
        ExperimentKind::Exp1 => {
            let plan = parse_exp1_plan(&text, origin, &loaded.root)?;
            let p = plan.clone();
            (plan.runs(), plan.settings.master_seed, Box::new(move |o| Ok(run_exp1(&p, o)?.failures())))
        }
        ExperimentKind::Exp2 => {
            let plan = parse_exp2_plan(&text, origin, &loaded.root)?;
            let p = plan.clone();
            (plan.runs(), plan.settings.master_seed, Box::new(move |o| Ok(run_exp2(&p, o)?.failures())))
        }
    };
    if let Some(o) = out {
        write_provenance(o, kind.name(), &loaded.table, &[("master_seed", seed)])?;
    }
    if dry_run {
        return print_plan(&runs, out);
    }
    let out = out.ok_or_else(|| cfg_err("--out is required"))?;
    let failed = exec(out)?;
    println!("{} runs, {failed} failed; results in {}", runs.len(), out.join("results.csv").display());
    Ok(())
}

fn default_experiment() -> String {
    "exp1".into()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    pub results_dir: PathBuf,
    #[serde(default = "default_experiment")]
    pub experiment: String,
}

pub fn cmd_report(loaded: &Loaded, out: &Path) -> Result<()> {
    let mut cfg: ReportConfig = loaded.parse()?;
    cfg.results_dir = loaded.resolve(&cfg.results_dir);
    let kind = match cfg.experiment.as_str() {
        "exp1" => ExperimentKind::Exp1,
        "exp2" => ExperimentKind::Exp2,
        other => bail!(cfg_err(format!("experiment must be \"exp1\" or \"exp2\", got {other:?}"))),
    };
    write_provenance(out, "report", &cfg, &[])?;
    let output = read_results(&cfg.results_dir, kind)?;
    let csv = cfg.results_dir.join("results.csv");
    let files = emit_report(&output, out, Some(&csv))?;
    println!("wrote {} files", files.len());
    Ok(())
}

fn d_languages() -> Vec<String> {
    vec!["english".into(), "catalan".into()]
}
fn d_train_speakers() -> usize {
    10
}
fn d_train_utts() -> usize {
    30
}
fn d_test_speakers() -> usize {
    2
}
fn d_test_utts() -> usize {
    10
}
fn d_min_dur() -> f64 {
    2.0
}
fn d_max_dur() -> f64 {
    3.0
}
fn d_noise_dur() -> f64 {
    30.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    #[serde(default = "d_languages")]
    pub languages: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_train_speakers")]
    pub train_speakers: usize,
    #[serde(default = "d_train_utts")]
    pub train_utterances_per_speaker: usize,
    #[serde(default = "d_test_speakers")]
    pub test_speakers: usize,
    #[serde(default = "d_test_utts")]
    pub test_utterances_per_speaker: usize,
    #[serde(default = "d_min_dur")]
    pub min_duration_s: f64,
    #[serde(default = "d_max_dur")]
    pub max_duration_s: f64,
    #[serde(default = "d_noise_dur")]
    pub noise_duration_s: f64,
}

pub fn cmd_synth(loaded: &Loaded, out: &Path) -> Result<()> {
    let cfg: SynthConfig = loaded.parse()?;
    if cfg.languages.is_empty() {
        bail!(cfg_err("languages is empty"));
    }
    write_provenance(out, "synth", &cfg, &[("seed", cfg.seed)])?;
    let langs: Vec<&str> = cfg.languages.iter().map(String::as_str).collect();
    let mut spec = CorpusSpec::desk(&langs, cfg.seed);
    spec.languages = cfg
        .languages
        .iter()
        .map(|l| LanguageSpec {
            language: l.clone(),
            train_speakers: cfg.train_speakers,
            train_utterances_per_speaker: cfg.train_utterances_per_speaker,
            test_speakers: cfg.test_speakers,
            test_utterances_per_speaker: cfg.test_utterances_per_speaker,
        })
        .collect();
    spec.min_duration_s = cfg.min_duration_s;
    spec.max_duration_s = cfg.max_duration_s;
    spec.noise_duration_s = cfg.noise_duration_s;
    let layout = build_corpus(&spec, out)?;
    for l in &layout.languages {
        println!("{}: {}", l.language, l.train_a.display());
    }
    Ok(())
}
