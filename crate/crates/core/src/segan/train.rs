use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::checkpoint::{load_checkpoint, save_checkpoint, ModelCheckpoint, Provenance};
use super::loss::{d_loss_graph, g_loss_graph};
use super::model::{bind, discriminator_graph, generator_graph, sample_z};
use super::{InitMode, ModelProfile, SeganError, TrainConfig};
use crate::audio::{chunk_signal, AudioClip, Chunk};
use crate::tensorgrad::{Graph, Parameter, RmsProp, TensorError, Var};

/// Aligned clean/noisy windows, both preemphasized.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingPair {
    pub clean: Chunk,
    pub noisy: Chunk,
}

/// Preemphasizes and windows each `(clean, noisy)` utterance pair.
pub fn prepare_pairs(utterances: &[(AudioClip, AudioClip)], window_len: usize, overlap: f64, preemphasis: f32) -> Result<Vec<TrainingPair>, SeganError> {
    let mut out = Vec::new();
    for (clean, noisy) in utterances {
        if clean.len() != noisy.len() {
            return Err(SeganError::Shape(format!(
                "{}: clean has {} samples, noisy {}",
                clean.utterance_id,
                clean.len(),
                noisy.len()
            )));
        }
        let c = chunk_signal(&clean.preemphasis(preemphasis)?, window_len, overlap);
        let n = chunk_signal(&noisy.preemphasis(preemphasis)?, window_len, overlap);
        out.extend(c.into_iter().zip(n).map(|(clean, noisy)| TrainingPair { clean, noisy }));
    }
    Ok(out)
}

/// sha256 over every sample of the corpus, in order.
pub fn corpus_fingerprint(corpus: &[TrainingPair]) -> String {
    let mut h = Sha256::new();
    for p in corpus {
        for v in p.clean.samples.iter().chain(&p.noisy.samples) {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossRecord {
    pub epoch: usize,
    pub batch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    pub l1_term: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: ModelCheckpoint,
    pub log: Vec<LossRecord>,
}

impl TrainOutcome {
    /// Mean L1 term per epoch.
    pub fn epoch_l1(&self) -> Vec<f64> {
        let mut sums: Vec<(f64, usize)> = Vec::new();
        for r in &self.log {
            if sums.len() <= r.epoch {
                sums.resize(r.epoch + 1, (0.0, 0));
            }
            sums[r.epoch].0 += r.l1_term;
            sums[r.epoch].1 += 1;
        }
        sums.into_iter().filter(|s| s.1 > 0).map(|(s, n)| s / n as f64).collect()
    }
}

pub fn write_loss_log(log: &[LossRecord], path: &Path) -> Result<(), SeganError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "epoch,batch,d_loss,g_loss,l1_term")?;
    for r in log {
        writeln!(out, "{},{},{},{},{}", r.epoch, r.batch, r.d_loss, r.g_loss, r.l1_term)?;
    }
    out.flush()?;
    Ok(())
}

/// Trains from scratch, or fine-tunes when `cfg.init_mode` names a base.
pub fn train(corpus: &[TrainingPair], profile: &ModelProfile, cfg: &TrainConfig) -> Result<TrainOutcome, SeganError> {
    cfg.validate()?;
    match &cfg.init_mode {
        InitMode::Scratch => {
            let init = ModelCheckpoint::init(profile, cfg.seed)?;
            run(init, corpus, cfg, Provenance { init_mode: "scratch".into(), ..Default::default() })
        }
        InitMode::Pretrained(path) => {
            let base = load_checkpoint(path)?;
            if &base.profile() != profile {
                return Err(SeganError::Architecture(format!("base checkpoint {} does not match the requested profile", path.display())));
            }
            finetune(&base, corpus, cfg)
        }
    }
}

/// Continues training from `base`, carrying its optimizer state. Zero
/// epochs returns the base weights unchanged.
pub fn finetune(base: &ModelCheckpoint, corpus: &[TrainingPair], cfg: &TrainConfig) -> Result<TrainOutcome, SeganError> {
    TrainConfig { epochs: cfg.epochs.max(1), ..cfg.clone() }.validate()?;
    base.validate()?;
    let provenance = Provenance {
        init_mode: "pretrained".into(),
        base_fingerprint: Some(base.fingerprint()?),
        ..Default::default()
    };
    run(base.clone(), corpus, cfg, provenance)
}

fn tag(e: SeganError, epoch: usize, batch: usize, term: &'static str) -> SeganError {
    match e {
        SeganError::Tensor(TensorError::NonFinite { op, stage }) => SeganError::NonFinite { epoch, batch, term, detail: format!("{op} ({stage})") },
        other => other,
    }
}

fn accumulate(params: &mut [Parameter], vars: &[Var], grads: &crate::tensorgrad::Gradients<f32>) -> Result<(), SeganError> {
    for (p, &v) in params.iter_mut().zip(vars) {
        match grads.get(v) {
            Some(g) => p.tensor.accumulate_grad(g)?,
            None => p.tensor.zero_grad(),
        }
    }
    Ok(())
}

fn batch_tensor(pairs: &[&TrainingPair], pick: impl Fn(&TrainingPair) -> &[f32]) -> Vec<f32> {
    pairs.iter().flat_map(|p| pick(p).iter().copied()).collect()
}

fn run(mut ckpt: ModelCheckpoint, corpus: &[TrainingPair], cfg: &TrainConfig, mut provenance: Provenance) -> Result<TrainOutcome, SeganError> {
    if corpus.is_empty() {
        return Err(SeganError::EmptyCorpus);
    }
    let gcfg = ckpt.generator.clone();
    let dcfg = ckpt.discriminator.clone();
    let w = gcfg.window_len;
    if let Some(bad) = corpus.iter().find(|p| p.clean.samples.len() != w || p.noisy.samples.len() != w) {
        return Err(SeganError::Shape(format!("training window from {} is not {w} samples", bad.clean.source_utterance)));
    }
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let opt = RmsProp { lr: cfg.lr, decay: cfg.rmsprop_decay, eps: cfg.eps };
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(3);
    let mut z_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    z_rng.set_stream(4);
    let z_dims = gcfg.z_dims();
    provenance.seed = cfg.seed;
    provenance.corpus_fingerprint = corpus_fingerprint(corpus);
    let mut log = Vec::new();
    let mut steps = 0usize;
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    'epochs: for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let batches: Vec<&[usize]> = order.chunks(cfg.batch_size).collect();
        for (bi, idx) in batches.iter().enumerate() {
            if cfg.max_steps.is_some_and(|m| steps >= m) {
                break 'epochs;
            }
            let pairs: Vec<&TrainingPair> = idx.iter().map(|&i| &corpus[i]).collect();
            let b = pairs.len();
            let shape = vec![b, 1, w];
            let clean = batch_tensor(&pairs, |p| &p.clean.samples);
            let noisy = batch_tensor(&pairs, |p| &p.noisy.samples);
            if let Some(p) = pairs.iter().find(|p| !p.clean.samples.iter().chain(&p.noisy.samples).all(|v| v.is_finite())) {
                let detail = format!("window of {} at offset {}", p.clean.source_utterance, p.clean.offset);
                return Err(SeganError::NonFinite { epoch, batch: bi, term: "input", detail });
            }
            let z = sample_z(&mut z_rng, b, z_dims);

            let mut gg = Graph::new();
            let gvars = bind(&mut gg, &ckpt.g_params, true)?;
            let x = gg.constant(shape.clone(), noisy.clone())?;
            let zv = gg.constant(z.shape().to_vec(), z.into_data())?;
            let (x_hat, _) = generator_graph(&mut gg, &gcfg, &gvars, x, zv).map_err(|e| tag(e, epoch, bi, "generator"))?;

            let d_loss = {
                let mut gd = Graph::new();
                let dvars = bind(&mut gd, &ckpt.d_params, !cfg.freeze_discriminator)?;
                let c = gd.constant(shape.clone(), clean.clone())?;
                let n = gd.constant(shape.clone(), noisy.clone())?;
                let f = gd.constant(shape.clone(), gg.value(x_hat).to_vec())?;
                let step = |gd: &mut Graph| -> Result<Var, SeganError> {
                    let real = discriminator_graph(gd, &dcfg, &dvars, c, n)?;
                    let fake = discriminator_graph(gd, &dcfg, &dvars, f, n)?;
                    d_loss_graph(gd, real, fake)
                };
                let dl = step(&mut gd).map_err(|e| tag(e, epoch, bi, "d_loss"))?;
                if !cfg.freeze_discriminator {
                    let grads = gd.backward(dl).map_err(|e| tag(e.into(), epoch, bi, "d_loss"))?;
                    accumulate(&mut ckpt.d_params, &dvars, &grads)?;
                    opt.step(&mut ckpt.d_params)?;
                }
                gd.scalar(dl) as f64
            };

            let dvars = bind(&mut gg, &ckpt.d_params, false)?;
            let c = gg.constant(shape.clone(), clean)?;
            let lv = discriminator_graph(&mut gg, &dcfg, &dvars, x_hat, x)
                .and_then(|fake| g_loss_graph(&mut gg, fake, x_hat, c, cfg.lambda_l1))
                .map_err(|e| tag(e, epoch, bi, "g_loss"))?;
            let grads = gg.backward(lv.loss).map_err(|e| tag(e.into(), epoch, bi, "g_loss"))?;
            accumulate(&mut ckpt.g_params, &gvars, &grads)?;
            opt.step(&mut ckpt.g_params)?;

            let rec = LossRecord { epoch, batch: bi, d_loss, g_loss: gg.scalar(lv.loss) as f64, l1_term: gg.scalar(lv.l1) as f64 };
            log::debug!("epoch {epoch} batch {bi}: d {:.4} g {:.4} l1 {:.5}", rec.d_loss, rec.g_loss, rec.l1_term);
            log.push(rec);
            steps += 1;
        }
        provenance.epochs_completed = epoch + 1;
        provenance.steps_completed = steps;
        if let Some(dir) = &cfg.out_dir {
            ckpt.provenance = provenance.clone();
            save_checkpoint(&ckpt, &dir.join(format!("epoch_{:03}.sgck", epoch + 1)))?;
        }
    }
    provenance.steps_completed = steps;
    ckpt.provenance = provenance;
    if let Some(dir) = &cfg.out_dir {
        save_checkpoint(&ckpt, &dir.join("final.sgck"))?;
        write_loss_log(&log, &dir.join("loss_log.csv"))?;
    }
    Ok(TrainOutcome { checkpoint: ckpt, log })
}
