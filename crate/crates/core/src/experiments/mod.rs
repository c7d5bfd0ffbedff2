//! Duration and noise-count sweeps comparing fine-tuning a pre-trained base
//! against training from scratch, with aggregation and chart output.

mod aggregate;
mod plan;
mod report;
mod runner;
mod sampling;
pub mod seeds;

pub use aggregate::{aggregate, aggregate_by_noise, mean_std, AggregateRow, MetricStat};
pub use plan::{
    load_exp1_plan, load_exp2_plan, full_repeats, parse_exp1_plan, parse_exp2_plan, DataPaths, EvalSettings, ExperimentKind, Exp1Plan, Exp2Plan, Mode, PlanSettings, PlannedRun,
    FULL_DURATIONS_S,
};
pub use report::{emit_report, Chart, HLine, Series};
pub use runner::{job_count, read_results, run_exp1, run_exp2, write_results, ExperimentOutput, RunResult, BY_NOISE_HEADER, JOBS_ENV, RESULTS_HEADER};
pub use sampling::{sample_noise_types, sample_training_subset};

use crate::audio::AudioError;
use crate::metrics::MetricError;
use crate::segan::SeganError;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("plan: {0}")]
    Plan(String),
    #[error("corpus holds {available_s:.1} s but {needed_s:.1} s were requested")]
    InsufficientData { needed_s: f64, available_s: f64 },
    #[error("aborted: {failed} of {planned} runs failed")]
    Aborted { failed: usize, planned: usize },
    #[error("results: {0}")]
    Parse(String),
    #[error(transparent)]
    Segan(#[from] SeganError),
    #[error(transparent)]
    Metrics(#[from] MetricError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
