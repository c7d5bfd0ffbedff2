use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use super::{composite_measures, llr, pesq_external, segmental_snr, wss, MetricConfig, MetricError, MetricsReport, PesqAdapter};
use crate::audio::{write_wav, AudioClip};

/// A (clean, degraded) pair to score. Paths are used for PESQ when present;
/// otherwise temporary WAVs are written.
#[derive(Clone, Debug)]
pub struct EvalPair {
    pub utterance_id: String,
    pub noise_type: String,
    pub snr_db: Option<f64>,
    pub clean: AudioClip,
    pub degraded: AudioClip,
    pub clean_path: Option<PathBuf>,
    pub degraded_path: Option<PathBuf>,
}

impl EvalPair {
    pub fn new(clean: AudioClip, degraded: AudioClip) -> Self {
        let (noise_type, snr_db) = match &degraded.condition {
            Some(c) => (c.noise_type.clone(), Some(c.snr_db)),
            None => (String::new(), None),
        };
        Self {
            utterance_id: clean.utterance_id.clone(),
            noise_type,
            snr_db,
            clean,
            degraded,
            clean_path: None,
            degraded_path: None,
        }
    }
}

/// One row of the per-utterance breakdown. `error` flags a failed row.
#[derive(Clone, Debug, PartialEq)]
pub struct UtteranceMetrics {
    pub utterance_id: String,
    pub noise_type: String,
    pub snr_db: Option<f64>,
    pub metrics: Option<MetricsReport>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusEvaluation {
    pub report: MetricsReport,
    /// Sorted by utterance id, then noise type and SNR.
    pub rows: Vec<UtteranceMetrics>,
    /// Keyed by `(noise_type, snr_db)`; SNR rendered with `{}` formatting.
    pub by_condition: BTreeMap<(String, String), MetricsReport>,
    pub by_noise_type: BTreeMap<String, MetricsReport>,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

fn pesq_for(pair: &EvalPair, adapter: &PesqAdapter) -> Result<Option<f64>, MetricError> {
    if let (Some(c), Some(d)) = (&pair.clean_path, &pair.degraded_path) {
        return pesq_external(c, d, adapter);
    }
    let id = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let dir = std::env::temp_dir().join(format!("seganforge-pesq-{}-{id}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let (c, d) = (dir.join("clean.wav"), dir.join("degraded.wav"));
    let result = write_wav(&pair.clean, &c).and_then(|_| write_wav(&pair.degraded, &d)).map_err(MetricError::from);
    let score = result.and_then(|_| pesq_external(&c, &d, adapter));
    let _ = std::fs::remove_dir_all(&dir);
    score
}

fn score_pair(pair: &EvalPair, cfg: &MetricConfig, adapter: Option<&PesqAdapter>) -> Result<MetricsReport, MetricError> {
    let ssnr = segmental_snr(&pair.clean, &pair.degraded, cfg)?;
    let llr = llr(&pair.clean, &pair.degraded, cfg)?;
    let wss = wss(&pair.clean, &pair.degraded, cfg)?;
    let pesq = match adapter {
        Some(a) => pesq_for(pair, a)?,
        None => None,
    };
    let composite = pesq.map(|p| composite_measures(p, llr, wss, ssnr));
    Ok(MetricsReport {
        pesq,
        csig: composite.map(|c| c.csig),
        cbak: composite.map(|c| c.cbak),
        covl: composite.map(|c| c.covl),
        ssnr,
        llr,
        wss,
        n_utterances: 1,
    })
}

/// Unweighted mean over reports; optional metrics are averaged only when
/// every report carries them.
pub(crate) fn mean_report<'a>(reports: impl IntoIterator<Item = &'a MetricsReport>) -> Option<MetricsReport> {
    let reports: Vec<&MetricsReport> = reports.into_iter().collect();
    if reports.is_empty() {
        return None;
    }
    let n = reports.len() as f64;
    let mean = |f: &dyn Fn(&MetricsReport) -> f64| reports.iter().map(|r| f(r)).sum::<f64>() / n;
    let opt_mean = |f: &dyn Fn(&MetricsReport) -> Option<f64>| -> Option<f64> {
        let vals: Option<Vec<f64>> = reports.iter().map(|r| f(r)).collect();
        vals.map(|v| v.iter().sum::<f64>() / n)
    };
    Some(MetricsReport {
        pesq: opt_mean(&|r| r.pesq),
        csig: opt_mean(&|r| r.csig),
        cbak: opt_mean(&|r| r.cbak),
        covl: opt_mean(&|r| r.covl),
        ssnr: mean(&|r| r.ssnr),
        llr: mean(&|r| r.llr),
        wss: mean(&|r| r.wss),
        n_utterances: reports.len(),
    })
}

/// Scores every pair and aggregates. Individual failures become flagged
/// rows; the call fails only if no pair could be scored.
pub fn evaluate_corpus(pairs: &[EvalPair], cfg: &MetricConfig, adapter: Option<&PesqAdapter>) -> Result<CorpusEvaluation, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::InvalidArgument("empty pair list".into()));
    }
    let mut order: Vec<&EvalPair> = pairs.iter().collect();
    order.sort_by(|a, b| {
        (a.utterance_id.as_str(), a.noise_type.as_str())
            .cmp(&(b.utterance_id.as_str(), b.noise_type.as_str()))
            .then(a.snr_db.unwrap_or(f64::NAN).total_cmp(&b.snr_db.unwrap_or(f64::NAN)))
    });
    let rows: Vec<UtteranceMetrics> = order
        .iter()
        .map(|p| {
            let result = score_pair(p, cfg, adapter);
            if let Err(e) = &result {
                log::warn!("{}: {e}", p.utterance_id);
            }
            UtteranceMetrics {
                utterance_id: p.utterance_id.clone(),
                noise_type: p.noise_type.clone(),
                snr_db: p.snr_db,
                error: result.as_ref().err().map(|e| e.to_string()),
                metrics: result.ok(),
            }
        })
        .collect();
    let report = mean_report(rows.iter().filter_map(|r| r.metrics.as_ref())).ok_or(MetricError::NothingEvaluated)?;
    let mut cond_groups: BTreeMap<(String, String), Vec<&MetricsReport>> = BTreeMap::new();
    let mut type_groups: BTreeMap<String, Vec<&MetricsReport>> = BTreeMap::new();
    for r in &rows {
        if let Some(m) = &r.metrics {
            let snr = r.snr_db.map(|s| s.to_string()).unwrap_or_default();
            cond_groups.entry((r.noise_type.clone(), snr)).or_default().push(m);
            type_groups.entry(r.noise_type.clone()).or_default().push(m);
        }
    }
    let by_condition = cond_groups.into_iter().filter_map(|(k, v)| mean_report(v).map(|m| (k, m))).collect();
    let by_noise_type = type_groups.into_iter().filter_map(|(k, v)| mean_report(v).map(|m| (k, m))).collect();
    Ok(CorpusEvaluation { report, rows, by_condition, by_noise_type })
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Per-utterance CSV: `utterance_id,noise_type,snr_db,pesq,csig,cbak,covl,ssnr,llr,wss,status`.
pub fn write_report_csv(eval: &CorpusEvaluation, path: &Path) -> Result<(), MetricError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "utterance_id,noise_type,snr_db,pesq,csig,cbak,covl,ssnr,llr,wss,status")?;
    for r in &eval.rows {
        let snr = r.snr_db.map(|s| s.to_string()).unwrap_or_default();
        let status = match &r.error {
            Some(e) => format!("\"error: {}\"", e.replace('"', "'")),
            None => "ok".to_string(),
        };
        match &r.metrics {
            Some(m) => writeln!(
                out,
                "{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{}",
                r.utterance_id,
                r.noise_type,
                snr,
                fmt_opt(m.pesq),
                fmt_opt(m.csig),
                fmt_opt(m.cbak),
                fmt_opt(m.covl),
                m.ssnr,
                m.llr,
                m.wss,
                status
            )?,
            None => writeln!(out, "{},{},{},,,,,,,,{}", r.utterance_id, r.noise_type, snr, status)?,
        }
    }
    out.flush()?;
    Ok(())
}
