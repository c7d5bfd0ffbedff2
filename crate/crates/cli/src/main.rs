//! `seganforge`: corpus mixing, training, enhancement, evaluation and the
//! adaptation experiments behind one binary.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::*;
use config::{ConfigError, Loaded};
use seganforge::experiments::ExperimentKind;

#[derive(Parser)]
#[command(name = "seganforge", version, about = "Waveform-domain speech enhancement GAN toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config file; relative paths inside it resolve against its directory.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set train.lr=1e-4`. Repeatable; wins over the file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Output directory for every artifact of the invocation.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(long, short, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Mix clean speech with noise over an SNR grid and write manifests.
    #[command(after_help = MIX_KEYS)]
    Mix,
    /// Train a model from scratch (or from `train.init_mode`).
    #[command(after_help = TRAIN_KEYS)]
    Train,
    /// Continue training a pre-trained checkpoint on new data.
    #[command(after_help = FINETUNE_KEYS)]
    Finetune,
    /// Enhance a WAV file or a directory of WAVs.
    #[command(after_help = ENHANCE_KEYS)]
    Enhance,
    /// Score a manifest (optionally after enhancement) with the quality measures.
    #[command(after_help = EVALUATE_KEYS)]
    Evaluate,
    /// Run the training-duration experiment.
    #[command(after_help = EXP1_KEYS)]
    Exp1 {
        /// Enumerate the planned runs without training.
        #[arg(long)]
        dry_run: bool,
    },
    /// Run the noise-diversity experiment.
    #[command(after_help = EXP2_KEYS)]
    Exp2 {
        /// Enumerate the planned runs without training.
        #[arg(long)]
        dry_run: bool,
    },
    /// Rebuild aggregates and charts from an existing results.csv.
    #[command(after_help = REPORT_KEYS)]
    Report,
    /// Generate a synthetic multi-language corpus.
    #[command(after_help = SYNTH_KEYS)]
    Synth,
}

fn require_out(out: Option<&Path>) -> Result<&Path> {
    out.ok_or_else(|| ConfigError("--out is required".into()).into())
}

fn run(cli: &Cli) -> Result<()> {
    let loaded = Loaded::new(cli.config.as_deref(), &cli.set)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Mix => cmd_mix(&loaded, require_out(out)?),
        Command::Train => cmd_train(&loaded, require_out(out)?),
        Command::Finetune => cmd_finetune(&loaded, require_out(out)?),
        Command::Enhance => cmd_enhance(&loaded, require_out(out)?),
        Command::Evaluate => cmd_evaluate(&loaded, require_out(out)?),
        Command::Exp1 { dry_run } => cmd_exp(&loaded, ExperimentKind::Exp1, out, *dry_run),
        Command::Exp2 { dry_run } => cmd_exp(&loaded, ExperimentKind::Exp2, out, *dry_run),
        Command::Report => cmd_report(&loaded, require_out(out)?),
        Command::Synth => cmd_synth(&loaded, require_out(out)?),
    }
}

/// Short error class for the machine-readable failure line.
fn error_kind(e: &anyhow::Error) -> &'static str {
    use seganforge::{audio::AudioError, experiments::ExperimentError, metrics::MetricError, segan::SeganError};
    if e.is::<ConfigError>() {
        "config"
    } else if let Some(x) = e.downcast_ref::<ExperimentError>() {
        match x {
            ExperimentError::Plan(_) | ExperimentError::Parse(_) => "config",
            ExperimentError::Aborted { .. } => "aborted",
            _ => "experiment",
        }
    } else if let Some(x) = e.downcast_ref::<SeganError>() {
        match x {
            SeganError::Config(_) => "config",
            SeganError::NonFinite { .. } => "nonfinite",
            SeganError::Corrupt { .. } | SeganError::Version { .. } => "checkpoint",
            _ => "model",
        }
    } else if e.is::<MetricError>() {
        "metrics"
    } else if e.is::<AudioError>() {
        "audio"
    } else if e.is::<std::io::Error>() {
        "io"
    } else {
        "other"
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = error_kind(&e);
            let line = serde_json::json!({ "status": "error", "kind": kind, "message": format!("{e:#}") });
            eprintln!("{line}");
            ExitCode::from(if kind == "config" { 2 } else { 1 })
        }
    }
}
