use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::plan::{ExperimentKind, Exp1Plan, Exp2Plan, Mode, PlanSettings, PlannedRun};
use super::report::emit_report;
use super::sampling::{sample_noise_types, sample_training_subset};
use super::seeds::{mix_seed, noise_seed};
use super::ExperimentError;
use crate::audio::{load_wav, mix_at_snr, read_manifest, AudioClip, ManifestRow, NoiseCondition};
use crate::metrics::{evaluate_corpus, EvalPair, MetricConfig, MetricsReport, PesqAdapter, METRIC_NAMES};
use crate::segan::{enhance, finetune, load_checkpoint, prepare_pairs, save_checkpoint, train, InitMode, ModelCheckpoint, ModelProfile, SeganError, TrainConfig};

pub const JOBS_ENV: &str = "SEGANFORGE_JOBS";

/// One row of results.csv. Baseline rows have no axis, repeat or seed.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub run_id: String,
    pub axis: Option<f64>,
    pub repeat: Option<usize>,
    /// `preeng`, `scratch`, or a baseline: `noisy`, `base`.
    pub mode: String,
    pub seed: Option<u64>,
    pub report: Option<MetricsReport>,
    pub by_noise_type: BTreeMap<String, MetricsReport>,
    pub wall_s: Option<f64>,
    /// `ok` or `failed:<code>`.
    pub status: String,
}

impl RunResult {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn is_baseline(&self) -> bool {
        self.axis.is_none()
    }
}

/// Everything a finished plan produced.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub kind: ExperimentKind,
    pub baselines: Vec<RunResult>,
    pub runs: Vec<RunResult>,
}

impl ExperimentOutput {
    pub fn all_rows(&self) -> impl Iterator<Item = &RunResult> {
        self.baselines.iter().chain(&self.runs)
    }

    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| !r.is_ok()).count()
    }
}

/// Worker count from `SEGANFORGE_JOBS`, else the available cores.
pub fn job_count() -> usize {
    std::env::var(JOBS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

#[derive(Clone)]
struct Utterance {
    row: ManifestRow,
    clean: AudioClip,
    noisy: AudioClip,
}

fn load_pairs(rows: &[ManifestRow]) -> Result<Vec<Utterance>, ExperimentError> {
    rows.iter()
        .map(|row| {
            let mut clean = load_wav(&row.clean_path)?;
            let mut noisy = load_wav(&row.mixed_path)?;
            for c in [&mut clean, &mut noisy] {
                c.utterance_id = row.utterance_id.clone();
                c.speaker_id = row.speaker_id.clone();
                c.language = row.language.clone();
            }
            noisy.condition = Some(NoiseCondition { noise_type: row.noise_type.clone(), snr_db: row.snr_db });
            Ok(Utterance { row: row.clone(), clean, noisy })
        })
        .collect()
}

fn file_sha256(path: &Path) -> Result<String, ExperimentError> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

/// Fixed evaluation set plus scoring settings.
struct Evaluator {
    test: Vec<Utterance>,
    metric_cfg: MetricConfig,
    pesq: Option<PesqAdapter>,
    enhance_seed: u64,
}

impl Evaluator {
    fn score(&self, degraded: impl Fn(&Utterance) -> Result<AudioClip, ExperimentError>) -> Result<(MetricsReport, BTreeMap<String, MetricsReport>), ExperimentError> {
        let mut pairs = Vec::with_capacity(self.test.len());
        for u in &self.test {
            let mut d = degraded(u)?;
            d.condition = u.noisy.condition.clone();
            let mut p = EvalPair::new(u.clean.clone(), d);
            p.noise_type = u.row.noise_type.clone();
            p.snr_db = Some(u.row.snr_db);
            pairs.push(p);
        }
        let eval = evaluate_corpus(&pairs, &self.metric_cfg, self.pesq.as_ref())?;
        let failed = eval.rows.iter().filter(|r| r.error.is_some()).count();
        if failed > 0 {
            log::warn!("{failed} test utterances could not be scored");
        }
        Ok((eval.report, eval.by_noise_type))
    }

    fn score_model(&self, ckpt: &ModelCheckpoint) -> Result<(MetricsReport, BTreeMap<String, MetricsReport>), ExperimentError> {
        self.score(|u| Ok(enhance(&u.noisy, ckpt, self.enhance_seed)?))
    }
}

fn failure_code(e: &ExperimentError) -> &'static str {
    match e {
        ExperimentError::InsufficientData { .. } => "insufficient_data",
        ExperimentError::Segan(SeganError::NonFinite { .. }) => "nonfinite",
        ExperimentError::Segan(_) => "training",
        ExperimentError::Metrics(_) => "metrics",
        ExperimentError::Audio(_) | ExperimentError::Io(_) => "io",
        _ => "other",
    }
}

#[derive(Serialize)]
struct RunProvenance<'a> {
    run_id: &'a str,
    mode: &'a str,
    axis: f64,
    repeat: usize,
    seed: u64,
    data_seed: u64,
    training_utterances: Vec<String>,
    noise_types: Vec<String>,
    base_fingerprint: Option<&'a str>,
    steps_completed: usize,
    corpus_fingerprint: String,
    status: String,
}

/// Training data of one run as `(clean, noisy)` clips plus the noise types used.
type RunData = (Vec<(AudioClip, AudioClip)>, Vec<String>);

struct Context<'a> {
    kind: ExperimentKind,
    settings: &'a PlanSettings,
    profile: ModelProfile,
    base: Option<(ModelCheckpoint, String)>,
    evaluator: Evaluator,
    out_dir: &'a Path,
    prepare: Box<dyn Fn(&PlannedRun) -> Result<RunData, ExperimentError> + Sync + 'a>,
}

impl Context<'_> {
    fn execute(&self, run: &PlannedRun) -> RunResult {
        let started = Instant::now();
        let run_dir = self.out_dir.join("runs").join(&run.run_id);
        let mut prov = RunProvenance {
            run_id: &run.run_id,
            mode: run.mode.name(),
            axis: run.axis,
            repeat: run.repeat,
            seed: run.seed,
            data_seed: run.data_seed,
            training_utterances: Vec::new(),
            noise_types: Vec::new(),
            base_fingerprint: None,
            steps_completed: 0,
            corpus_fingerprint: String::new(),
            status: String::new(),
        };
        let outcome = (|| -> Result<(MetricsReport, BTreeMap<String, MetricsReport>), ExperimentError> {
            let (utts, noises) = (self.prepare)(run)?;
            prov.training_utterances = utts.iter().map(|(c, _)| c.utterance_id.clone()).collect();
            prov.noise_types = noises;
            let g = &self.profile.generator;
            let corpus = prepare_pairs(&utts, g.window_len, self.settings.train.train_overlap, g.preemphasis)?;
            let mut cfg = TrainConfig { seed: run.seed, out_dir: None, ..self.settings.train.clone() };
            let trained = match run.mode {
                Mode::Scratch => {
                    cfg.init_mode = InitMode::Scratch;
                    train(&corpus, &self.profile, &cfg)?
                }
                Mode::Preeng => {
                    let (base, fp) = self.base.as_ref().ok_or_else(|| ExperimentError::Plan("preeng mode requires data.base_checkpoint".into()))?;
                    prov.base_fingerprint = Some(fp);
                    finetune(base, &corpus, &cfg)?
                }
            };
            prov.steps_completed = trained.checkpoint.provenance.steps_completed;
            prov.corpus_fingerprint = trained.checkpoint.provenance.corpus_fingerprint.clone();
            if self.settings.keep_checkpoints {
                std::fs::create_dir_all(&run_dir)?;
                save_checkpoint(&trained.checkpoint, &run_dir.join("model.sgck"))?;
            }
            self.evaluator.score_model(&trained.checkpoint)
        })();
        let (report, by_noise, status) = match outcome {
            Ok((r, b)) => (Some(r), b, "ok".to_string()),
            Err(e) => {
                log::error!("{}: {e}", run.run_id);
                (None, BTreeMap::new(), format!("failed:{}", failure_code(&e)))
            }
        };
        prov.status = status.clone();
        let written = std::fs::create_dir_all(&run_dir)
            .map_err(ExperimentError::from)
            .and_then(|_| write_json(&run_dir.join("provenance.json"), &prov));
        if let Err(e) = written {
            log::warn!("{}: cannot write provenance: {e}", run.run_id);
        }
        let wall = started.elapsed().as_secs_f64();
        log::info!("{} {} in {wall:.1}s", run.run_id, status);
        RunResult {
            run_id: run.run_id.clone(),
            axis: Some(run.axis),
            repeat: Some(run.repeat),
            mode: run.mode.name().into(),
            seed: Some(run.seed),
            report,
            by_noise_type: by_noise,
            wall_s: Some(wall),
            status,
        }
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| ExperimentError::Plan(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn baseline(name: &str, mode: &str, scored: Result<(MetricsReport, BTreeMap<String, MetricsReport>), ExperimentError>) -> Result<RunResult, ExperimentError> {
    let (report, by_noise) = scored?;
    Ok(RunResult {
        run_id: format!("{name}-baseline-{mode}"),
        axis: None,
        repeat: None,
        mode: mode.into(),
        seed: None,
        report: Some(report),
        by_noise_type: by_noise,
        wall_s: None,
        status: "ok".into(),
    })
}

#[derive(Serialize)]
struct PlanProvenance<'a, P: Serialize> {
    tool_version: &'static str,
    experiment: &'static str,
    plan: &'a P,
    planned_runs: usize,
    train_manifest_sha256: String,
    test_manifest_sha256: String,
    base_fingerprint: Option<String>,
    seed_scheme: &'static str,
}

fn execute_plan<P: Serialize>(
    kind: ExperimentKind,
    plan: &P,
    settings: &PlanSettings,
    runs: Vec<PlannedRun>,
    out_dir: &Path,
    prepare: Box<dyn Fn(&PlannedRun) -> Result<RunData, ExperimentError> + Sync + '_>,
) -> Result<ExperimentOutput, ExperimentError> {
    std::fs::create_dir_all(out_dir)?;
    let profile = settings.model_profile()?;
    let base = match &settings.data.base_checkpoint {
        Some(path) => {
            let ckpt = load_checkpoint(path)?;
            if ckpt.profile() != profile {
                return Err(ExperimentError::Plan(format!("base checkpoint {} does not match profile '{}'", path.display(), settings.profile)));
            }
            let fp = ckpt.fingerprint()?;
            Some((ckpt, fp))
        }
        None if settings.init_modes.contains(&Mode::Preeng) => {
            return Err(ExperimentError::Plan("preeng mode requires data.base_checkpoint".into()));
        }
        None => None,
    };
    let test_rows = read_manifest(&settings.data.test_manifest)?;
    if test_rows.is_empty() {
        return Err(ExperimentError::Plan("test manifest is empty".into()));
    }
    let evaluator = Evaluator {
        test: load_pairs(&test_rows)?,
        metric_cfg: MetricConfig::default(),
        pesq: settings.eval.pesq_command.as_ref().map(|c| PesqAdapter { command: c.clone(), pattern: settings.eval.pesq_pattern.clone() }),
        enhance_seed: settings.eval.enhance_seed,
    };
    write_json(
        &out_dir.join("provenance.json"),
        &PlanProvenance {
            tool_version: env!("CARGO_PKG_VERSION"),
            experiment: kind.name(),
            plan,
            planned_runs: runs.len(),
            train_manifest_sha256: file_sha256(&settings.data.train_manifest)?,
            test_manifest_sha256: file_sha256(&settings.data.test_manifest)?,
            base_fingerprint: base.as_ref().map(|b| b.1.clone()),
            seed_scheme: "splitmix64(master_seed + counter * 0x9E3779B97F4A7C15); run counter = 1 + run index, data/noise/mix counters = stream<<40 | axis_index<<20 | repeat",
        },
    )?;

    let mut baselines = vec![baseline(&settings.name, "noisy", evaluator.score(|u| Ok(u.noisy.clone())))?];
    if let Some((ckpt, _)) = &base {
        baselines.push(baseline(&settings.name, "base", evaluator.score_model(ckpt))?);
    }

    let ctx = Context { kind, settings, profile, base, evaluator, out_dir, prepare };
    let total = runs.len();
    let slots: Mutex<Vec<Option<RunResult>>> = Mutex::new(vec![None; total]);
    let next = AtomicUsize::new(0);
    let failures = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let limit = settings.max_failure_fraction * total as f64;
    let jobs = job_count().min(total.max(1));
    log::info!("{}: {total} runs on {jobs} worker(s)", ctx.kind.name());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                if abort.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= total {
                    break;
                }
                let result = ctx.execute(&runs[i]);
                if !result.is_ok() && (failures.fetch_add(1, Ordering::SeqCst) + 1) as f64 > limit {
                    abort.store(true, Ordering::SeqCst);
                }
                slots.lock().expect("no poisoned workers")[i] = Some(result);
            });
        }
    });
    let done: Vec<RunResult> = slots.into_inner().expect("no poisoned workers").into_iter().flatten().collect();
    let output = ExperimentOutput { kind, baselines, runs: done };
    write_results(&output, out_dir, settings.record_wall_time)?;
    if abort.load(Ordering::SeqCst) {
        return Err(ExperimentError::Aborted { failed: output.failures(), planned: total });
    }
    emit_report(&output, out_dir, Some(&out_dir.join("results.csv")))?;
    Ok(output)
}

/// Duration sweep: sample utterances, train or fine-tune, score on the
/// fixed test set. Writes results, per-run provenance and the report.
pub fn run_exp1(plan: &Exp1Plan, out_dir: &Path) -> Result<ExperimentOutput, ExperimentError> {
    plan.validate()?;
    let train_rows = read_manifest(&plan.settings.data.train_manifest)?;
    let pool = load_pairs(&train_rows)?;
    let by_key: HashMap<(String, PathBuf), usize> = pool.iter().enumerate().map(|(i, u)| ((u.row.utterance_id.clone(), u.row.mixed_path.clone()), i)).collect();
    let prepare = move |run: &PlannedRun| -> Result<RunData, ExperimentError> {
        let subset = sample_training_subset(&train_rows, run.axis, run.data_seed)?;
        let mut noises: Vec<String> = subset.iter().map(|r| r.noise_type.clone()).collect();
        noises.sort();
        noises.dedup();
        let utts = subset
            .iter()
            .map(|r| {
                let u = &pool[by_key[&(r.utterance_id.clone(), r.mixed_path.clone())]];
                (u.clean.clone(), u.noisy.clone())
            })
            .collect();
        Ok((utts, noises))
    };
    execute_plan(ExperimentKind::Exp1, plan, &plan.settings, plan.runs(), out_dir, Box::new(prepare))
}

/// Noise-count sweep: clean utterances up to the fixed duration, remixed
/// with a seeded subset of the training noise pool.
pub fn run_exp2(plan: &Exp2Plan, out_dir: &Path) -> Result<ExperimentOutput, ExperimentError> {
    plan.validate()?;
    let noise_dir = plan.settings.data.noise_dir.as_ref().ok_or_else(|| ExperimentError::Plan("exp2 requires data.noise_dir".into()))?;
    let noises: HashMap<String, AudioClip> = plan
        .noise_types
        .iter()
        .map(|t| {
            let mut clip = load_wav(noise_dir.join(format!("{t}.wav")))?;
            clip.utterance_id = t.clone();
            Ok((t.clone(), clip))
        })
        .collect::<Result<_, ExperimentError>>()?;
    let test_types: Vec<String> = read_manifest(&plan.settings.data.test_manifest)?.into_iter().map(|r| r.noise_type).collect();
    if let Some(t) = plan.noise_types.iter().find(|t| test_types.contains(t)) {
        log::warn!("training noise type '{t}' also occurs in the test set");
    }
    let mut seen = std::collections::HashSet::new();
    let clean_rows: Vec<ManifestRow> = read_manifest(&plan.settings.data.train_manifest)?.into_iter().filter(|r| seen.insert(r.utterance_id.clone())).collect();
    let clean: HashMap<String, AudioClip> = clean_rows
        .iter()
        .map(|r| {
            let mut clip = load_wav(&r.clean_path)?;
            clip.utterance_id = r.utterance_id.clone();
            clip.speaker_id = r.speaker_id.clone();
            clip.language = r.language.clone();
            Ok((r.utterance_id.clone(), clip))
        })
        .collect::<Result<_, ExperimentError>>()?;
    let master = plan.settings.master_seed;
    let prepare = move |run: &PlannedRun| -> Result<RunData, ExperimentError> {
        let types = sample_noise_types(&plan.noise_types, run.axis as usize, noise_seed(master, run.axis_index, run.repeat))?;
        let subset = sample_training_subset(&clean_rows, plan.fixed_duration_s, run.data_seed)?;
        let conds: Vec<(&String, f64)> = types.iter().flat_map(|t| plan.snrs_db.iter().map(move |&s| (t, s))).collect();
        let base_seed = mix_seed(master, run.axis_index, run.repeat);
        let mut utts = Vec::with_capacity(subset.len());
        for (j, row) in subset.iter().enumerate() {
            let (t, snr) = conds[j % conds.len()];
            let c = &clean[&row.utterance_id];
            let m = mix_at_snr(c, &noises[t], snr, base_seed.wrapping_add(j as u64))?;
            utts.push((c.clone(), m.clip));
        }
        Ok((utts, types))
    };
    execute_plan(ExperimentKind::Exp2, plan, &plan.settings, plan.runs(), out_dir, Box::new(prepare))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn metric_cells(report: Option<&MetricsReport>) -> Vec<String> {
    METRIC_NAMES.iter().map(|m| fmt_opt(report.and_then(|r| r.get(m)))).collect()
}

pub const RESULTS_HEADER: &str = "run_id,axis,repeat,mode,seed,pesq,csig,cbak,covl,ssnr,llr,wss,wall_s,status";
pub const BY_NOISE_HEADER: &str = "run_id,axis,mode,noise_type,pesq,csig,cbak,covl,ssnr,llr,wss";

/// results.csv, results_by_noise.csv and timings.csv. Wall times go to
/// results.csv only when requested so reruns stay byte-identical.
pub fn write_results(output: &ExperimentOutput, out_dir: &Path, record_wall_time: bool) -> Result<(), ExperimentError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(out_dir.join("results.csv"))?);
    writeln!(f, "{RESULTS_HEADER}")?;
    for r in output.all_rows() {
        let wall = if record_wall_time { r.wall_s.map(|w| format!("{w:.3}")).unwrap_or_default() } else { String::new() };
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            r.run_id,
            r.axis.map(|a| a.to_string()).unwrap_or_default(),
            r.repeat.map(|a| a.to_string()).unwrap_or_default(),
            r.mode,
            r.seed.map(|a| a.to_string()).unwrap_or_default(),
            metric_cells(r.report.as_ref()).join(","),
            wall,
            r.status
        )?;
    }
    f.flush()?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(out_dir.join("results_by_noise.csv"))?);
    writeln!(f, "{BY_NOISE_HEADER}")?;
    for r in output.all_rows() {
        for (noise, m) in &r.by_noise_type {
            writeln!(
                f,
                "{},{},{},{},{}",
                r.run_id,
                r.axis.map(|a| a.to_string()).unwrap_or_default(),
                r.mode,
                noise,
                metric_cells(Some(m)).join(",")
            )?;
        }
    }
    f.flush()?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(out_dir.join("timings.csv"))?);
    writeln!(f, "run_id,wall_s")?;
    for r in output.runs.iter() {
        writeln!(f, "{},{}", r.run_id, r.wall_s.map(|w| format!("{w:.3}")).unwrap_or_default())?;
    }
    f.flush()?;
    Ok(())
}

fn parse_opt(s: &str) -> Result<Option<f64>, ExperimentError> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|e| ExperimentError::Parse(format!("{s:?}: {e}")))
    }
}

fn report_from(cells: &[&str]) -> Result<Option<MetricsReport>, ExperimentError> {
    let v: Vec<Option<f64>> = cells.iter().map(|c| parse_opt(c)).collect::<Result<_, _>>()?;
    Ok(match (v[4], v[5], v[6]) {
        (Some(ssnr), Some(llr), Some(wss)) => Some(MetricsReport { pesq: v[0], csig: v[1], cbak: v[2], covl: v[3], ssnr, llr, wss, n_utterances: 0 }),
        _ => None,
    })
}

/// Reads results.csv (and results_by_noise.csv when present) back in.
pub fn read_results(out_dir: &Path, kind: ExperimentKind) -> Result<ExperimentOutput, ExperimentError> {
    let mut rdr = csv::Reader::from_path(out_dir.join("results.csv")).map_err(|e| ExperimentError::Parse(e.to_string()))?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| ExperimentError::Parse(e.to_string()))?;
        let f: Vec<&str> = rec.iter().collect();
        if f.len() != 14 {
            return Err(ExperimentError::Parse(format!("results.csv row with {} fields", f.len())));
        }
        let num = |s: &str| -> Result<Option<u64>, ExperimentError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|e| ExperimentError::Parse(format!("{s:?}: {e}")))
            }
        };
        rows.push(RunResult {
            run_id: f[0].into(),
            axis: parse_opt(f[1])?,
            repeat: num(f[2])?.map(|v| v as usize),
            mode: f[3].into(),
            seed: num(f[4])?,
            report: report_from(&f[5..12])?,
            by_noise_type: BTreeMap::new(),
            wall_s: parse_opt(f[12])?,
            status: f[13].into(),
        });
    }
    let by_noise_path = out_dir.join("results_by_noise.csv");
    if by_noise_path.exists() {
        let mut rdr = csv::Reader::from_path(by_noise_path).map_err(|e| ExperimentError::Parse(e.to_string()))?;
        let index: HashMap<String, usize> = rows.iter().enumerate().map(|(i, r)| (r.run_id.clone(), i)).collect();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| ExperimentError::Parse(e.to_string()))?;
            let f: Vec<&str> = rec.iter().collect();
            if f.len() != 11 {
                return Err(ExperimentError::Parse(format!("results_by_noise.csv row with {} fields", f.len())));
            }
            if let (Some(&i), Some(rep)) = (index.get(f[0]), report_from(&f[4..11])?) {
                rows[i].by_noise_type.insert(f[3].into(), rep);
            }
        }
    }
    let (baselines, runs) = rows.into_iter().partition(|r| r.is_baseline());
    Ok(ExperimentOutput { kind, baselines, runs })
}
