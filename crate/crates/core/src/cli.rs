//! Command-line front end. `run` parses arguments, dispatches and maps failures to exit codes:
//! 0 success, 1 usage error (bad flags, missing inputs), 2 runtime failure. Every subcommand
//! accepts `--config FILE`, a JSON object keyed by long flag names with `-` written as `_`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::audio::{read_wav, write_wav};
use crate::dataset::{build_dataset, write_synthetic_corpus, BuildConfig, PromptBank, EXCERPT_SECONDS};
use crate::degrade::{self, synthetic_mic_bank, synthetic_rir_bank, Banks, DegradationKind};
use crate::error::Error;
use crate::flow::{load_checkpoint, load_pairs, save_checkpoint, PromptIndex, TrainConfig};
use crate::metrics::evaluate_dataset;
use crate::restore::{restore_song, ChunkPlan, SolverConfig, SolverKind};
use crate::rng::child_rng;

pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "remaster", version, about = "Degrade, evaluate and restore stereo music")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Apply one degradation to a WAV file
    Degrade(DegradeArgs),
    /// Build a paired degraded/clean dataset from a folder of WAV tracks
    BuildDataset(BuildArgs),
    /// Score processed files against the clean references of a manifest
    Eval(EvalArgs),
    /// Train a restoration model on a built dataset
    Train(TrainArgs),
    /// Restore a WAV file with a trained model
    Restore(RestoreArgs),
    /// Write the synthetic mic/room impulse-response banks and the default prompt bank
    GenBanks(GenBanksArgs),
    /// Write a folder of synthetic music tracks for testing the pipeline
    GenCorpus(GenCorpusArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct DegradeArgs {
    /// Input WAV file
    #[arg(long, value_name = "FILE")]
    r#in: Option<PathBuf>,
    /// Output WAV file
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Degradation kind (xband, mic, bright, dark, airy, boom, clarity, mud, warm, vocal, comp,
    /// punch, small, big, mix, real, clip, volume, stereo)
    #[arg(long, value_name = "KIND")]
    effect: Option<String>,
    /// Random seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Directory of microphone impulse responses (default: synthetic bank)
    #[arg(long, value_name = "DIR")]
    mic_bank: Option<PathBuf>,
    /// Directory of room impulse responses (default: synthetic bank)
    #[arg(long, value_name = "DIR")]
    rir_bank: Option<PathBuf>,
    /// Also write the applied parameters as JSON
    #[arg(long, value_name = "FILE")]
    record: Option<PathBuf>,
    /// JSON file with defaults for any of these flags; flags take precedence
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct BuildArgs {
    /// Folder of source WAV tracks (optional genres.json maps track id to genre group)
    #[arg(long, value_name = "DIR")]
    corpus: Option<PathBuf>,
    /// Output folder (clean/, degraded/, manifest.jsonl)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Master seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads [default: 1]
    #[arg(long)]
    workers: Option<usize>,
    /// Excerpt length in seconds [default: 30]
    #[arg(long, value_name = "SECONDS")]
    excerpt_seconds: Option<f64>,
    /// Directory of microphone impulse responses (default: synthetic bank)
    #[arg(long, value_name = "DIR")]
    mic_bank: Option<PathBuf>,
    /// Directory of room impulse responses (default: synthetic bank)
    #[arg(long, value_name = "DIR")]
    rir_bank: Option<PathBuf>,
    /// Prompt bank JSON (default: built-in bank)
    #[arg(long, value_name = "FILE")]
    prompt_bank: Option<PathBuf>,
    /// JSON file with defaults for any of these flags; flags take precedence
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct EvalArgs {
    /// Dataset manifest (clean paths are relative to its folder)
    #[arg(long, value_name = "FILE")]
    manifest: Option<PathBuf>,
    /// Folder with one processed file per row, named like the degraded file
    #[arg(long, value_name = "DIR")]
    processed: Option<PathBuf>,
    /// Output JSON report
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// Worker threads [default: 1]
    #[arg(long)]
    workers: Option<usize>,
    /// JSON file with defaults for any of these flags; flags take precedence
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct TrainArgs {
    /// Training config JSON (lr, batch, steps, seed, model sizes, dropout); may also hold
    /// defaults for the flags below
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Dataset folder containing manifest.jsonl
    #[arg(long, value_name = "DIR")]
    data: Option<PathBuf>,
    /// Output checkpoint file
    #[arg(long, value_name = "FILE")]
    checkpoint: Option<PathBuf>,
    /// Override the number of optimizer steps
    #[arg(long)]
    steps: Option<usize>,
    /// Override the learning rate
    #[arg(long)]
    lr: Option<f64>,
    /// Override the batch size
    #[arg(long)]
    batch: Option<usize>,
    /// Override the seed
    #[arg(long)]
    seed: Option<u64>,
    /// Also write per-step losses as JSON
    #[arg(long, value_name = "FILE")]
    losses: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct RestoreArgs {
    /// Input WAV file
    #[arg(long, value_name = "FILE")]
    r#in: Option<PathBuf>,
    /// Output WAV file
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Instruction text; omit for automatic correction
    #[arg(long)]
    prompt: Option<String>,
    /// Model checkpoint
    #[arg(long, value_name = "FILE")]
    checkpoint: Option<PathBuf>,
    /// ODE solver: euler or rk4 [default: euler]
    #[arg(long)]
    solver: Option<String>,
    /// Integration steps [default: 10]
    #[arg(long)]
    steps: Option<usize>,
    /// Classifier-free guidance scale [default: 1]
    #[arg(long)]
    guidance: Option<f64>,
    /// Chunk length in seconds [default: 30]
    #[arg(long, value_name = "SECONDS")]
    chunk_seconds: Option<f64>,
    /// Overlap between chunks in seconds [default: 10]
    #[arg(long, value_name = "SECONDS")]
    overlap_seconds: Option<f64>,
    /// Length of the audio cue passed between chunks in seconds [default: 10]
    #[arg(long, value_name = "SECONDS")]
    cue_seconds: Option<f64>,
    /// JSON file with defaults for any of these flags; flags take precedence
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct GenBanksArgs {
    /// Output folder (mic/, rir/, prompt_bank.json)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed of the synthetic banks [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// JSON file with defaults for any of these flags; flags take precedence
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct GenCorpusArgs {
    /// Output folder
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Number of tracks [default: 10]
    #[arg(long)]
    count: Option<usize>,
    /// Track length in seconds [default: 43]
    #[arg(long, value_name = "SECONDS")]
    seconds: Option<f64>,
    /// Random seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// JSON file with defaults for any of these flags; flags take precedence
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Fills unset flags from a JSON object file.
fn merged<T: Serialize + DeserializeOwned>(args: &T, config: Option<&Path>) -> CliResult<T> {
    let mut base = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str::<Value>(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?
        }
        None => Value::Object(Default::default()),
    };
    let Value::Object(map) = &mut base else {
        return Err(usage("config file must hold a JSON object"));
    };
    if let Value::Object(flags) = serde_json::to_value(args).map_err(Error::from)? {
        for (k, v) in flags {
            if !v.is_null() {
                map.insert(k, v);
            }
        }
    }
    serde_json::from_value(base).map_err(|e| usage(format!("invalid config value: {e}")))
}

fn required<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| usage(format!("missing required flag --{flag}")))
}

fn existing(path: Option<PathBuf>, flag: &str) -> CliResult<PathBuf> {
    let path = required(path, flag)?;
    if !path.exists() {
        return Err(usage(format!("--{flag}: {} does not exist", path.display())));
    }
    Ok(path)
}

fn pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Runtime(Error::Config(e.to_string())))
}

fn degrade_cmd(args: DegradeArgs) -> CliResult<()> {
    let a = merged(&args, args.config.as_deref())?;
    let input = existing(a.r#in, "in")?;
    let out = required(a.out, "out")?;
    let kind: DegradationKind = required(a.effect, "effect")?
        .parse()
        .map_err(|e: Error| usage(e.to_string()))?;
    let banks = Banks::load(a.mic_bank.as_deref(), a.rir_bank.as_deref(), crate::dataset::DEFAULT_BANK_SEED)?;
    let wf = read_wav(&input)?;
    let mut rng = child_rng(a.seed.unwrap_or(DEFAULT_SEED), "degrade");
    let (degraded, record) = degrade::apply(kind, &wf, &banks, &mut rng)?.ok_or_else(|| {
        CliError::Runtime(Error::InvalidWaveform(
            "input is too narrow for stereo folding (std(L-R) must exceed 0.08)".into(),
        ))
    })?;
    write_wav(&degraded, &out)?;
    let json = serde_json::to_string(&record).map_err(Error::from)?;
    log::info!("{json}");
    if let Some(path) = a.record {
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn build_cmd(args: BuildArgs) -> CliResult<()> {
    let a = merged(&args, args.config.as_deref())?;
    let cfg = BuildConfig {
        corpus_dir: existing(a.corpus, "corpus")?,
        out_dir: required(a.out, "out")?,
        seed: a.seed.unwrap_or(DEFAULT_SEED),
        workers: a.workers.unwrap_or(1),
        excerpt_seconds: a.excerpt_seconds.unwrap_or(EXCERPT_SECONDS),
        mic_bank_dir: a.mic_bank,
        rir_bank_dir: a.rir_bank,
        prompt_bank: a.prompt_bank,
    };
    let rows = build_dataset(&cfg)?;
    log::info!("wrote {} rows to {}", rows.len(), cfg.out_dir.display());
    Ok(())
}

fn eval_cmd(args: EvalArgs) -> CliResult<()> {
    let a = merged(&args, args.config.as_deref())?;
    let manifest = existing(a.manifest, "manifest")?;
    let processed = existing(a.processed, "processed")?;
    let report_path = required(a.report, "report")?;
    let report = pool(a.workers.unwrap_or(1))?.install(|| evaluate_dataset(&manifest, &processed))?;
    report.write(&report_path)?;
    log::info!(
        "evaluated {} rows ({} skipped)",
        report.rows_evaluated,
        report.rows_skipped
    );
    Ok(())
}

fn train_cmd(args: TrainArgs) -> CliResult<()> {
    let a = merged(&args, args.config.as_deref())?;
    let mut cfg = match &args.config {
        Some(p) => TrainConfig::load(p).map_err(|e| usage(format!("invalid training config: {e}")))?,
        None => TrainConfig::default(),
    };
    cfg.steps = a.steps.unwrap_or(cfg.steps);
    cfg.lr = a.lr.unwrap_or(cfg.lr);
    cfg.batch = a.batch.unwrap_or(cfg.batch);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    let data = existing(a.data, "data")?;
    let checkpoint = required(a.checkpoint, "checkpoint")?;
    let pairs = load_pairs(&data, cfg.frame_len)?;
    log::info!("training on {} pairs for {} steps", pairs.len(), cfg.steps);
    let index = PromptIndex::from_bank(&PromptBank::default());
    let (model, losses) = crate::flow::train_model(&cfg, &pairs, index)?;
    save_checkpoint(&model, cfg.frame_len, &checkpoint)?;
    if let Some(path) = a.losses {
        let json = serde_json::to_string(&losses).map_err(Error::from)?;
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn restore_cmd(args: RestoreArgs) -> CliResult<()> {
    let a = merged(&args, args.config.as_deref())?;
    let input = existing(a.r#in, "in")?;
    let out = required(a.out, "out")?;
    let checkpoint = existing(a.checkpoint, "checkpoint")?;
    let kind: SolverKind = a
        .solver
        .as_deref()
        .unwrap_or("euler")
        .parse()
        .map_err(|e: Error| usage(e.to_string()))?;
    let solver = SolverConfig {
        kind,
        steps: a.steps.unwrap_or(10),
        guidance: a.guidance.unwrap_or(1.0),
    };
    solver.validate().map_err(|e| usage(e.to_string()))?;
    let defaults = ChunkPlan::default();
    let plan = ChunkPlan {
        chunk_seconds: a.chunk_seconds.unwrap_or(defaults.chunk_seconds),
        overlap_seconds: a.overlap_seconds.unwrap_or(defaults.overlap_seconds),
        cue_seconds: a.cue_seconds.unwrap_or(defaults.cue_seconds),
    };
    plan.validate().map_err(|e| usage(e.to_string()))?;
    let (model, _) = load_checkpoint(&checkpoint)?;
    let prompt = a.prompt.unwrap_or_default();
    if prompt.trim().is_empty() {
        log::info!("no prompt given; running automatic correction");
    }
    let wf = read_wav(&input)?;
    let restored = restore_song(&wf, &prompt, &model, &solver, &plan)?;
    write_wav(&restored, &out)?;
    Ok(())
}

fn gen_banks_cmd(args: GenBanksArgs) -> CliResult<()> {
    let a = merged(&args, args.config.as_deref())?;
    let out = required(a.out, "out")?;
    let seed = a.seed.unwrap_or(crate::dataset::DEFAULT_BANK_SEED);
    synthetic_mic_bank(seed).write_dir(out.join("mic"))?;
    synthetic_rir_bank(seed).write_dir(out.join("rir"))?;
    PromptBank::default().save(out.join("prompt_bank.json"))?;
    Ok(())
}

fn gen_corpus_cmd(args: GenCorpusArgs) -> CliResult<()> {
    let a = merged(&args, args.config.as_deref())?;
    let out = required(a.out, "out")?;
    let seconds = a.seconds.unwrap_or(43.0);
    if !(seconds > 0.0) {
        return Err(usage("--seconds must be positive"));
    }
    write_synthetic_corpus(&out, a.count.unwrap_or(10), seconds, a.seed.unwrap_or(DEFAULT_SEED))?;
    Ok(())
}

/// Runs the command line `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Degrade(a) => degrade_cmd(a),
        Command::BuildDataset(a) => build_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Restore(a) => restore_cmd(a),
        Command::GenBanks(a) => gen_banks_cmd(a),
        Command::GenCorpus(a) => gen_corpus_cmd(a),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            1
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"seed": 5, "workers": 3, "out": "from_file"}"#).unwrap();
        let args = BuildArgs {
            seed: Some(9),
            ..Default::default()
        };
        let m = merged(&args, Some(&cfg)).unwrap();
        assert_eq!((m.seed, m.workers), (Some(9), Some(3)));
        assert_eq!(m.out.as_deref(), Some(Path::new("from_file")));
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["remaster", "frobnicate"]), 1);
        assert_eq!(run(["remaster", "eval", "--manifest", "/nonexistent/m.jsonl", "--processed", ".", "--report", "r.json"]), 1);
        assert_eq!(run(["remaster", "degrade", "--bogus"]), 1);
        assert_eq!(run(["remaster", "--help"]), 0);
    }
}
