use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seganforge::audio::AudioClip;
use seganforge::segan::*;
use seganforge::tensorgrad::{Parameter, Tensor};

fn utterance(n: usize, seed: u64) -> (AudioClip, AudioClip) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = rng.gen_range(150.0..400.0f32);
    let clean: Vec<f32> = (0..n).map(|i| 0.3 * (2.0 * std::f32::consts::PI * f * i as f32 / 16000.0).sin()).collect();
    let noisy = clean.iter().map(|v| v + rng.gen_range(-0.05..0.05)).collect();
    (AudioClip::new(clean).with_id(format!("u{seed}")), AudioClip::new(noisy).with_id(format!("u{seed}")))
}

fn corpus(windows: usize) -> Vec<TrainingPair> {
    let utts: Vec<_> = (0..windows as u64).map(|s| utterance(1024, s)).collect();
    prepare_pairs(&utts, 1024, 0.0, 0.95).unwrap()
}

fn quick(seed: u64) -> TrainConfig {
    TrainConfig { batch_size: 4, epochs: 2, seed, ..Default::default() }
}

fn weights(params: &[Parameter]) -> Vec<&[f32]> {
    params.iter().map(|p| p.tensor.data()).collect()
}

/// Equal weights, optimizer state, configs and provenance; gradient buffers are not persisted.
fn assert_same(a: &ModelCheckpoint, b: &ModelCheckpoint) {
    assert_eq!(a.to_bytes().unwrap(), b.to_bytes().unwrap());
    assert_eq!(a.profile(), b.profile());
    assert_eq!(a.provenance, b.provenance);
}

fn batch(b: usize, w: usize, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(vec![b, 1, w], |_| rng.gen_range(-0.5..0.5))
}

#[test]
fn desk_shapes_and_latent() {
    let p = ModelProfile::desk();
    let g = init_generator(&p.generator, 1).unwrap();
    let d = init_discriminator(&p.discriminator, 1).unwrap();
    let x = batch(3, 1024, 2);
    let z = sample_z(&mut ChaCha8Rng::seed_from_u64(3), 3, p.generator.z_dims());
    assert_eq!(z.shape(), &[3, 128, 16]);
    assert_eq!(encode(&p.generator, &g, &x).unwrap().shape(), &[3, 128, 16]);
    let y = generator_forward(&p.generator, &g, &x, &z).unwrap();
    assert_eq!(y.shape(), &[3, 1, 1024]);
    assert!(y.data().iter().all(|v| v.abs() <= 1.0));
    assert_eq!(discriminator_forward(&p.discriminator, &d, &y, &x).unwrap().shape(), &[3, 1]);
}

#[test]
fn canonical_shapes_and_latent() {
    let p = ModelProfile::canonical();
    assert_eq!(p.generator.z_dims(), (1024, 8));
    let g = init_generator(&p.generator, 1).unwrap();
    let x = batch(1, 16384, 4);
    assert_eq!(encode(&p.generator, &g, &x).unwrap().shape(), &[1, 1024, 8]);
    let z = sample_z(&mut ChaCha8Rng::seed_from_u64(5), 1, p.generator.z_dims());
    assert_eq!(generator_forward(&p.generator, &g, &x, &z).unwrap().shape(), &[1, 1, 16384]);
}

#[test]
fn wrong_window_is_a_shape_error() {
    let p = ModelProfile::desk();
    let g = init_generator(&p.generator, 1).unwrap();
    let x = batch(1, 1000, 2);
    assert!(matches!(encode(&p.generator, &g, &x), Err(SeganError::Shape(_))));
}

#[test]
fn discriminator_conditioning_is_ordered() {
    let p = ModelProfile::desk();
    let d = init_discriminator(&p.discriminator, 9).unwrap();
    let (a, b) = (batch(2, 1024, 10), batch(2, 1024, 11));
    let ab = discriminator_forward(&p.discriminator, &d, &a, &b).unwrap();
    let ba = discriminator_forward(&p.discriminator, &d, &b, &a).unwrap();
    assert_ne!(ab.data(), ba.data());
}

#[test]
fn zero_weights_give_silence() {
    let p = ModelProfile::desk();
    let mut g = init_generator(&p.generator, 1).unwrap();
    for q in &mut g {
        q.tensor.data_mut().fill(0.0);
    }
    let z = sample_z(&mut ChaCha8Rng::seed_from_u64(3), 2, p.generator.z_dims());
    let y = generator_forward(&p.generator, &g, &batch(2, 1024, 1), &z).unwrap();
    assert!(y.data().iter().all(|&v| v == 0.0));
}

#[test]
fn zero_learning_rate_freezes_weights() {
    let data = corpus(4);
    let init = ModelCheckpoint::init(&ModelProfile::desk(), 3).unwrap();
    let out = train(&data, &ModelProfile::desk(), &TrainConfig { lr: 0.0, epochs: 1, ..quick(3) }).unwrap();
    assert_eq!(weights(&out.checkpoint.g_params), weights(&init.g_params));
    assert_eq!(weights(&out.checkpoint.d_params), weights(&init.d_params));
    assert_eq!(out.log.len(), 1);
}

#[test]
fn training_is_deterministic() {
    let data = corpus(8);
    let a = train(&data, &ModelProfile::desk(), &quick(5)).unwrap();
    let b = train(&data, &ModelProfile::desk(), &quick(5)).unwrap();
    assert_eq!(a.checkpoint.to_bytes().unwrap(), b.checkpoint.to_bytes().unwrap());
    assert_eq!(a.log, b.log);
    assert_eq!(a.log.len(), 4);
    let c = train(&data, &ModelProfile::desk(), &quick(6)).unwrap();
    assert_ne!(weights(&a.checkpoint.g_params), weights(&c.checkpoint.g_params));
    assert_eq!(a.checkpoint.provenance.steps_completed, 4);
    assert_eq!(a.checkpoint.provenance.corpus_fingerprint, corpus_fingerprint(&data));
}

#[test]
fn max_steps_stops_mid_epoch() {
    let out = train(&corpus(8), &ModelProfile::desk(), &TrainConfig { max_steps: Some(3), ..quick(1) }).unwrap();
    assert_eq!(out.log.len(), 3);
    assert_eq!(out.checkpoint.provenance.steps_completed, 3);
}

#[test]
fn frozen_discriminator_is_untouched() {
    let data = corpus(4);
    let base = train(&data, &ModelProfile::desk(), &TrainConfig { epochs: 1, ..quick(2) }).unwrap().checkpoint;
    let tuned = finetune(&base, &data, &TrainConfig { freeze_discriminator: true, ..quick(4) }).unwrap().checkpoint;
    assert_eq!(tuned.d_params, base.d_params);
    assert_ne!(weights(&tuned.g_params), weights(&base.g_params));
    assert_eq!(tuned.provenance.base_fingerprint, Some(base.fingerprint().unwrap()));
    assert_eq!(tuned.provenance.init_mode, "pretrained");
}

#[test]
fn finetune_for_zero_epochs_returns_base_weights() {
    let data = corpus(4);
    let base = train(&data, &ModelProfile::desk(), &TrainConfig { epochs: 1, ..quick(2) }).unwrap().checkpoint;
    let same = finetune(&base, &data, &TrainConfig { epochs: 0, ..quick(9) }).unwrap();
    assert!(same.log.is_empty());
    assert_eq!(same.checkpoint.g_params, base.g_params);
    assert_eq!(same.checkpoint.d_params, base.d_params);
}

#[test]
fn pretrained_profile_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("base.sgck");
    save_checkpoint(&ModelCheckpoint::init(&ModelProfile::desk(), 1).unwrap(), &path).unwrap();
    let cfg = TrainConfig { init_mode: InitMode::Pretrained(path), ..quick(1) };
    let err = train(&corpus(2), &ModelProfile::canonical(), &cfg).unwrap_err();
    assert!(matches!(err, SeganError::Architecture(_)), "{err}");
}

#[test]
fn zero_l1_weight_changes_the_update() {
    let data = corpus(4);
    let with = train(&data, &ModelProfile::desk(), &quick(7)).unwrap();
    let without = train(&data, &ModelProfile::desk(), &TrainConfig { lambda_l1: 0.0, ..quick(7) }).unwrap();
    assert_ne!(weights(&with.checkpoint.g_params), weights(&without.checkpoint.g_params));
    // Same data and seed: D sees the same first batch.
    assert_eq!(with.log[0].d_loss, without.log[0].d_loss);
    assert!(without.log.iter().all(|r| r.g_loss.is_finite() && r.l1_term.is_finite() && r.g_loss < with.log[0].g_loss));
}

#[test]
fn non_finite_input_is_diagnosed() {
    let mut data = corpus(4);
    data[1].noisy.samples[10] = f32::NAN;
    let err = train(&data, &ModelProfile::desk(), &TrainConfig { batch_size: 8, ..quick(1) }).unwrap_err();
    match err {
        SeganError::NonFinite { epoch, batch, term, detail } => {
            assert_eq!((epoch, batch, term), (0, 0, "input"));
            assert!(detail.contains("u1"), "{detail}");
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn empty_corpus_is_rejected() {
    assert!(matches!(train(&[], &ModelProfile::desk(), &quick(1)), Err(SeganError::EmptyCorpus)));
}

#[test]
fn enhance_preserves_length_and_is_reproducible() {
    let ckpt = ModelCheckpoint::init(&ModelProfile::desk(), 4).unwrap();
    for n in [100, 16384, 50000] {
        let (_, noisy) = utterance(n, n as u64);
        let a = enhance(&noisy, &ckpt, 11).unwrap();
        let b = enhance(&noisy, &ckpt, 11).unwrap();
        assert_eq!(a.len(), n);
        assert_eq!(a.samples, b.samples);
        assert!(a.samples.iter().all(|v| v.is_finite()));
    }
    let empty = AudioClip::new(Vec::new());
    assert!(enhance(&empty, &ckpt, 0).unwrap().is_empty());
}

#[test]
fn checkpoint_round_trip_and_damage() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = train(&corpus(4), &ModelProfile::desk(), &TrainConfig { epochs: 1, ..quick(8) }).unwrap().checkpoint;
    let path = dir.path().join("m.sgck");
    save_checkpoint(&ckpt, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_same(&back, &ckpt);
    assert!(back.g_params.iter().any(|p| p.mean_square.iter().any(|&v| v != 0.0)));

    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], MAGIC);
    for cut in [2, 10, bytes.len() / 2, bytes.len() - 1] {
        assert!(matches!(ModelCheckpoint::from_bytes(&bytes[..cut], "t"), Err(SeganError::Corrupt { .. })), "cut {cut}");
    }
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(matches!(ModelCheckpoint::from_bytes(&extra, "t"), Err(SeganError::Corrupt { .. })));
    let mut future = bytes.clone();
    future[4..8].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
    match ModelCheckpoint::from_bytes(&future, "t") {
        Err(SeganError::Version { found, supported, .. }) => assert_eq!((found, supported), (FORMAT_VERSION + 1, FORMAT_VERSION)),
        other => panic!("unexpected {other:?}"),
    }
    let missing = load_checkpoint(&dir.path().join("nope.sgck")).unwrap_err();
    assert!(missing.to_string().contains("nope.sgck"));
}

#[test]
fn checkpoints_written_per_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = TrainConfig { out_dir: Some(dir.path().to_path_buf()), ..quick(1) };
    let out = train(&corpus(4), &ModelProfile::desk(), &cfg).unwrap();
    for name in ["epoch_001.sgck", "epoch_002.sgck", "final.sgck", "loss_log.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    assert_same(&load_checkpoint(&dir.path().join("final.sgck")).unwrap(), &out.checkpoint);
    let log = std::fs::read_to_string(dir.path().join("loss_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 1 + out.log.len());
}
