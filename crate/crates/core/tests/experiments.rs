use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use proptest::prelude::*;
use quick_xml::events::Event;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seganforge::audio::{read_manifest, ManifestRow};
use seganforge::experiments::*;
use seganforge::metrics::MetricsReport;
use seganforge::segan::{prepare_pairs, save_checkpoint, train, ModelProfile, TrainConfig};
use seganforge::synth::{build_corpus, CorpusLayout, CorpusSpec, NoiseKind};

#[test]
fn full_plans_enumerate_expected_runs() {
    let e1 = Exp1Plan::full(1);
    assert_eq!(e1.runs().len(), 120);
    assert_eq!(e1.repeats, vec![10, 10, 10, 5, 5, 5, 5, 5, 5]);
    let e2 = Exp2Plan::full(1);
    assert_eq!(e2.runs().len(), 100);
    assert_eq!(Exp1Plan::desk(1).runs().len(), 22);
    let ids: HashSet<String> = e1.runs().into_iter().map(|r| r.run_id).collect();
    assert_eq!(ids.len(), 120);
}

#[test]
fn plan_text_round_trip_and_unknown_keys() {
    let text = "name = \"t\"\nmaster_seed = 3\ndurations_s = [24.0]\nrepeats = [2]\n[data]\ntrain_manifest = \"a.tsv\"\ntest_manifest = \"b.tsv\"\n";
    let plan = parse_exp1_plan(text, "t.toml", Path::new("/x")).unwrap();
    assert_eq!(plan.settings.data.train_manifest, PathBuf::from("/x/a.tsv"));
    assert_eq!(plan.runs().len(), 4);
    let bad = format!("{text}[train]\nlearning_rate = 1.0\n");
    let err = parse_exp1_plan(&bad, "t.toml", Path::new("/x")).unwrap_err().to_string();
    assert!(err.contains("learning_rate") && err.contains("line"), "{err}");
    let err = parse_exp1_plan(&format!("colour = 1\n{text}"), "t.toml", Path::new("/x")).unwrap_err().to_string();
    assert!(err.contains("colour"), "{err}");
}

fn pool(n: usize, seed: u64) -> Vec<ManifestRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| ManifestRow {
            utterance_id: format!("u{i:03}"),
            speaker_id: format!("s{}", i % 10),
            language: "xx".into(),
            clean_path: PathBuf::from(format!("c{i}.wav")),
            noise_type: "white".into(),
            snr_db: 5.0,
            mixed_path: PathBuf::from(format!("m{i}.wav")),
            duration_s: 2.0 + rand::Rng::gen_range(&mut rng, 0.0..1.0),
        })
        .collect()
}

#[test]
fn subsets_meet_target_and_vary_with_seed() {
    let rows = pool(300, 1);
    let mut seen = HashSet::new();
    for trial in 0..100u64 {
        let sub = sample_training_subset(&rows, 24.0, seeds::data_seed(9, 0, trial as usize)).unwrap();
        let total: f64 = sub.iter().map(|r| r.duration_s).sum();
        assert!(total >= 24.0 && total - sub.last().unwrap().duration_s < 24.0);
        let ids: Vec<String> = sub.into_iter().map(|r| r.utterance_id).collect();
        seen.insert(ids);
    }
    assert!(seen.len() > 95, "{} distinct subsets", seen.len());
    let all: f64 = rows.iter().map(|r| r.duration_s).sum();
    assert!(matches!(sample_training_subset(&rows, all + 1.0, 0), Err(ExperimentError::InsufficientData { .. })));
}

#[test]
fn noise_type_draws_are_distinct() {
    let types: Vec<String> = NoiseKind::family_a().iter().map(|k| k.name().to_string()).collect();
    for k in 1..=types.len() {
        let got = sample_noise_types(&types, k, k as u64).unwrap();
        assert_eq!(got.iter().collect::<HashSet<_>>().len(), k);
    }
    assert!(sample_noise_types(&types, types.len() + 1, 0).is_err());
    assert!(sample_noise_types(&types, 0, 0).is_err());
}

fn report(ssnr: f64) -> MetricsReport {
    MetricsReport { pesq: None, csig: None, cbak: None, covl: None, ssnr, llr: 1.0, wss: 40.0, n_utterances: 2 }
}

fn result(id: String, axis: f64, mode: &str, ssnr: f64) -> RunResult {
    let mut by_noise = BTreeMap::new();
    by_noise.insert("babble".to_string(), report(ssnr - 1.0));
    RunResult {
        run_id: id,
        axis: Some(axis),
        repeat: Some(0),
        mode: mode.into(),
        seed: Some(1),
        report: Some(report(ssnr)),
        by_noise_type: by_noise,
        wall_s: None,
        status: "ok".into(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn aggregates_ignore_row_order(vals in prop::collection::vec(-10.0f64..35.0, 6..18), seed in any::<u64>()) {
        let rows: Vec<RunResult> = vals
            .iter()
            .enumerate()
            .map(|(i, &v)| result(format!("r{i:02}"), [24.0, 60.0][i % 2], ["preeng", "scratch"][(i / 2) % 2], v))
            .collect();
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(aggregate(&rows), aggregate(&shuffled));
        prop_assert_eq!(aggregate_by_noise(&rows), aggregate_by_noise(&shuffled));
    }
}

#[test]
fn aggregate_statistics() {
    let rows = vec![result("a".into(), 24.0, "preeng", 2.0), result("b".into(), 24.0, "preeng", 4.0), result("c".into(), 24.0, "scratch", 1.0)];
    let agg = aggregate(&rows);
    assert_eq!(agg.len(), 2);
    let s = agg[0].stats["ssnr"];
    assert_eq!((agg[0].mode.as_str(), agg[0].n), ("preeng", 2));
    assert!((s.mean - 3.0).abs() < 1e-12 && (s.std - 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(agg[1].stats["ssnr"].std, 0.0);
    assert!(!agg[0].stats.contains_key("pesq"));
}

/// Parses an SVG, returning the number of plotted points and the metadata text.
fn svg_summary(text: &str) -> (usize, String) {
    let mut reader = quick_xml::Reader::from_str(text);
    let (mut points, mut meta, mut in_meta, mut depth) = (0, String::new(), false, 0i32);
    loop {
        match reader.read_event().expect("well-formed svg") {
            Event::Start(e) => {
                depth += 1;
                in_meta = e.name().as_ref() == b"metadata";
            }
            Event::End(_) => {
                depth -= 1;
                in_meta = false;
            }
            Event::Empty(e) => {
                if e.name().as_ref() == b"circle" && e.attributes().flatten().any(|a| a.key.as_ref() == b"class" && a.value.as_ref() == b"point") {
                    points += 1;
                }
            }
            Event::Text(t) if in_meta => meta.push_str(&t.unescape().unwrap()),
            Event::Eof => break,
            _ => {}
        }
    }
    assert_eq!(depth, 0);
    (points, meta)
}

#[test]
fn report_without_baselines() {
    let dir = tempfile::tempdir().unwrap();
    let rows = vec![
        result("a".into(), 24.0, "preeng", 2.0),
        result("b".into(), 60.0, "preeng", 3.0),
        result("c".into(), 24.0, "scratch", 1.0),
        result("d".into(), 60.0, "scratch", 1.5),
    ];
    let out = ExperimentOutput { kind: ExperimentKind::Exp1, baselines: Vec::new(), runs: rows };
    write_results(&out, dir.path(), false).unwrap();
    let written = emit_report(&out, dir.path(), Some(&dir.path().join("results.csv"))).unwrap();
    let baselines = std::fs::read_to_string(dir.path().join("baselines.csv")).unwrap();
    assert!(baselines.contains("# no baselines recorded"));
    let svg = std::fs::read_to_string(dir.path().join("exp1_ssnr.svg")).unwrap();
    let (points, meta) = svg_summary(&svg);
    assert_eq!(points, 4);
    assert!(meta.contains("aggregates.csv") && meta.contains("results.csv"), "{meta}");
    assert!(!svg.contains("class=\"baseline\""));
    assert!(!dir.path().join("exp1_pesq.svg").exists());
    for p in written.iter().filter(|p| p.extension().is_some_and(|e| e == "svg")) {
        svg_summary(&std::fs::read_to_string(p).unwrap());
    }
    let back = read_results(dir.path(), ExperimentKind::Exp1).unwrap();
    assert_eq!(back.runs.len(), 4);
    assert_eq!(aggregate(&back.runs), aggregate(&out.runs));
}

fn tiny_corpus(root: &Path) -> CorpusLayout {
    let mut spec = CorpusSpec::desk(&["english", "catalan"], 3);
    for l in &mut spec.languages {
        l.train_speakers = 2;
        l.train_utterances_per_speaker = 4;
        l.test_speakers = 1;
        l.test_utterances_per_speaker = 2;
    }
    spec.min_duration_s = 1.0;
    spec.max_duration_s = 1.5;
    spec.noise_duration_s = 4.0;
    build_corpus(&spec, root).unwrap()
}

fn tiny_base(layout: &CorpusLayout, path: &Path) {
    let rows = read_manifest(&layout.language("english").unwrap().train_a).unwrap();
    let utts: Vec<_> = rows
        .iter()
        .map(|r| (seganforge::audio::load_wav(&r.clean_path).unwrap(), seganforge::audio::load_wav(&r.mixed_path).unwrap()))
        .collect();
    let corpus = prepare_pairs(&utts, 1024, 0.0, 0.95).unwrap();
    let cfg = TrainConfig { batch_size: 4, epochs: 1, max_steps: Some(2), seed: 1, ..Default::default() };
    save_checkpoint(&train(&corpus, &ModelProfile::desk(), &cfg).unwrap().checkpoint, path).unwrap();
}

fn quick_train() -> TrainConfig {
    TrainConfig { batch_size: 4, epochs: 1, max_steps: Some(2), ..Default::default() }
}

#[test]
fn tiny_experiments_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let layout = tiny_corpus(&dir.path().join("corpus"));
    let base = dir.path().join("base.sgck");
    tiny_base(&layout, &base);
    let cat = layout.language("catalan").unwrap();

    let mut plan = Exp1Plan::desk(4);
    plan.durations_s = vec![3.0, 6.0];
    plan.repeats = vec![2, 1];
    plan.settings.data = DataPaths { train_manifest: cat.train_b.clone(), test_manifest: cat.test_b.clone(), base_checkpoint: Some(base.clone()), noise_dir: None };
    plan.settings.train = quick_train();
    let a = run_exp1(&plan, &dir.path().join("a")).unwrap();
    run_exp1(&plan, &dir.path().join("b")).unwrap();
    assert_eq!(a.runs.len(), 6);
    assert!(a.runs.iter().all(|r| r.is_ok()));
    assert_eq!(a.baselines.iter().map(|r| r.mode.as_str()).collect::<Vec<_>>(), ["noisy", "base"]);
    for f in ["results.csv", "results_by_noise.csv", "aggregates.csv"] {
        assert_eq!(std::fs::read(dir.path().join("a").join(f)).unwrap(), std::fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("a/results.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), RESULTS_HEADER);
    assert_eq!(csv.lines().count(), 1 + 2 + 6);
    for r in &a.runs {
        let prov: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("a/runs").join(&r.run_id).join("provenance.json")).unwrap()).unwrap();
        assert_eq!(prov["status"], "ok");
        assert_eq!(prov["base_fingerprint"].is_string(), r.mode == "preeng");
    }
    // Paired modes train on the same utterances.
    let utts = |id: &str| {
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("a/runs").join(id).join("provenance.json")).unwrap()).unwrap();
        v["training_utterances"].clone()
    };
    assert_eq!(utts("exp1-d3-r00-preeng"), utts("exp1-d3-r00-scratch"));
    assert_ne!(utts("exp1-d3-r00-preeng"), utts("exp1-d3-r01-preeng"));
    let (points, _) = svg_summary(&std::fs::read_to_string(dir.path().join("a/exp1_ssnr.svg")).unwrap());
    assert_eq!(points, 4);

    let mut p2 = Exp2Plan::full(5);
    p2.settings.profile = "desk".into();
    p2.settings.init_modes = vec![Mode::Scratch];
    p2.noise_counts = vec![1, 2];
    p2.runs_per_count = 1;
    p2.fixed_duration_s = 3.0;
    p2.noise_types.truncate(3);
    p2.settings.data = DataPaths {
        train_manifest: cat.train_a.clone(),
        test_manifest: cat.test_b.clone(),
        base_checkpoint: None,
        noise_dir: Some(layout.noise_train_dir.clone()),
    };
    p2.settings.train = quick_train();
    let out = run_exp2(&p2, &dir.path().join("e2")).unwrap();
    assert_eq!(out.runs.len(), 2);
    assert_eq!(out.baselines.len(), 1);
    let prov: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("e2/runs/exp2-n2-r00-scratch/provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["noise_types"].as_array().unwrap().len(), 2);
}

#[test]
fn preeng_without_base_is_a_plan_error() {
    let dir = tempfile::tempdir().unwrap();
    let layout = tiny_corpus(&dir.path().join("corpus"));
    let cat = layout.language("catalan").unwrap();
    let mut plan = Exp1Plan::desk(4);
    plan.durations_s = vec![3.0];
    plan.repeats = vec![1];
    plan.settings.data = DataPaths { train_manifest: cat.train_b.clone(), test_manifest: cat.test_b.clone(), base_checkpoint: None, noise_dir: None };
    assert!(matches!(run_exp1(&plan, &dir.path().join("o")), Err(ExperimentError::Plan(_))));
}
