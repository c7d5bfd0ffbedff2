use std::collections::BTreeMap;

use super::RunResult;
use crate::metrics::{MetricsReport, METRIC_NAMES};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricStat {
    pub mean: f64,
    /// Unbiased sample standard deviation; 0 for a single run.
    pub std: f64,
}

/// Statistics of one (axis value, mode) cell, optionally for one noise type.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub axis: f64,
    pub mode: String,
    pub noise_type: Option<String>,
    pub n: usize,
    /// Metrics present in every run of the cell.
    pub stats: BTreeMap<&'static str, MetricStat>,
}

pub fn mean_std(values: &[f64]) -> MetricStat {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 { (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    MetricStat { mean, std }
}

fn reduce(axis: f64, mode: &str, noise_type: Option<String>, mut cell: Vec<(&str, &MetricsReport)>) -> AggregateRow {
    // Summation order fixed by run id, so input order cannot leak in.
    cell.sort_by(|a, b| a.0.cmp(b.0));
    let mut stats = BTreeMap::new();
    for name in METRIC_NAMES {
        let vals: Option<Vec<f64>> = cell.iter().map(|(_, r)| r.get(name)).collect();
        if let Some(v) = vals {
            stats.insert(name, mean_std(&v));
        }
    }
    AggregateRow { axis, mode: mode.to_string(), noise_type, n: cell.len(), stats }
}

type Key = (String, u64);

fn key(mode: &str, axis: f64) -> Key {
    // Order-preserving bit pattern for the non-negative axis values used here.
    (mode.to_string(), axis.to_bits())
}

/// Per (mode, axis) statistics over successful, non-baseline runs, ordered
/// by mode then axis.
pub fn aggregate(results: &[RunResult]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<Key, Vec<(&str, &MetricsReport)>> = BTreeMap::new();
    for r in results.iter().filter(|r| r.is_ok()) {
        if let (Some(axis), Some(rep)) = (r.axis, r.report.as_ref()) {
            groups.entry(key(&r.mode, axis)).or_default().push((&r.run_id, rep));
        }
    }
    groups.into_iter().map(|((mode, bits), cell)| reduce(f64::from_bits(bits), &mode, None, cell)).collect()
}

/// Same as [`aggregate`], split by test noise type.
pub fn aggregate_by_noise(results: &[RunResult]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(String, Key), Vec<(&str, &MetricsReport)>> = BTreeMap::new();
    for r in results.iter().filter(|r| r.is_ok()) {
        if let Some(axis) = r.axis {
            for (noise, rep) in &r.by_noise_type {
                groups.entry((noise.clone(), key(&r.mode, axis))).or_default().push((&r.run_id, rep));
            }
        }
    }
    groups.into_iter().map(|((noise, (mode, bits)), cell)| reduce(f64::from_bits(bits), &mode, Some(noise), cell)).collect()
}
