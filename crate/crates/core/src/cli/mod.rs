//! The `intseq` command line: ingest → split → train → eval → solve →
//! spectrum, plus Solver evaluation and report summaries.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
//! Every run that writes files also writes one [`RunManifest`] next to them.

mod config;
mod manifest;

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use serde::Serialize;

pub use config::{ConfigFile, ModelSection};
pub use manifest::{config_hash, manifest_path, sha256_hex, FileDigest, RunManifest, REPORT_VERSION};

use crate::analytics::{self, EvalReport};
use crate::corpus::{self, CorpusSplit, SequenceRecord, MAX_PREFIX};
use crate::featurizer::{EncodedSequence, MaskedSample};
use crate::model::{Model, ModelConfig, Size};
use crate::solver::{self, SolverQuery};
use crate::trainer::checkpoint::Checkpoint;
use crate::trainer::{Dataset, EpochRecord, TrainError, TrainObserver, Trainer};
use crate::Variant;

pub const CORPUS_FILE: &str = "corpus.txt";
pub const SPLIT_DIR: &str = "split";
pub const FINAL_CHECKPOINT: &str = "model.ckpt";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const THREADS_ENV: &str = "INTSEQ_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn data(path: &Path, e: impl Display) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }

    fn write(path: &Path, e: impl Display) -> Self {
        CliError::Runtime(format!("cannot write {}: {e}", path.display()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "intseq", version, about = "Masked integer-sequence modelling and CRT-based integer recovery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and filter an OEIS stripped file into DIR/corpus.txt.
    Ingest(IngestArgs),
    /// Split an ingested corpus into train/validation/test id lists.
    Split(SplitArgs),
    /// Train a model; writes metrics.jsonl and checkpoints.
    Train(TrainArgs),
    /// Masked-position evaluation of a checkpoint on a split.
    Eval(EvalArgs),
    /// Next-term Solver evaluation of a checkpoint on a split.
    SolverEval(SolverEvalArgs),
    /// Predict and reconstruct a hidden term of one sequence.
    Solve(SolveArgs),
    /// Export the per-modulus NIG spectrum of a report as CSV.
    Spectrum(SpectrumArgs),
    /// Summarise one or more evaluation reports as Markdown.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub stripped: PathBuf,
    #[arg(long)]
    pub keywords: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Directory written by `ingest`.
    #[arg(long, default_value = "data")]
    pub data: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "8,1,1")]
    pub ratios: String,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub size: Option<Size>,
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub d_model: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub ffn_mult: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub grad_accum: Option<usize>,
    #[arg(long)]
    pub mask_p: Option<f64>,
    #[arg(long)]
    pub grad_clip: Option<f64>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Print one line per epoch to stderr.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mask_p: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolverEvalArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = "data")]
    pub data: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(long, default_value = "solver_report.json")]
    pub out: PathBuf,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Comma-separated list of k values.
    #[arg(long)]
    pub topk: Option<String>,
    #[arg(long)]
    pub beam: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Comma-separated terms; one `?` marks the hidden term, otherwise the
    /// term after the last one is predicted.
    #[arg(long)]
    pub sequence: String,
    #[arg(long, default_value_t = 10)]
    pub topk: usize,
    #[arg(long)]
    pub beam: Option<usize>,
    /// Also write the result (and a manifest) to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Evaluation reports to summarise.
    #[arg(long = "report", required = true, num_args = 1..)]
    pub reports: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs the CLI on `argv` (including the program name) and returns the exit
/// code.
pub fn main(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    match run(cli.command, argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    // Fails only if a pool already exists (e.g. repeated calls in one process).
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(command: Command, argv: &[String]) -> Result<(), CliError> {
    let started = Instant::now();
    let ctx = RunContext { argv: argv.to_vec(), started };
    match command {
        Command::Ingest(a) => ingest(a, &ctx),
        Command::Split(a) => split(a, &ctx),
        Command::Train(a) => train(a, &ctx),
        Command::Eval(a) => eval(a, &ctx),
        Command::SolverEval(a) => solver_eval(a, &ctx),
        Command::Solve(a) => solve(a, &ctx),
        Command::Spectrum(a) => spectrum(a, &ctx),
        Command::Report(a) => report(a, &ctx),
    }
}

struct RunContext {
    argv: Vec<String>,
    started: Instant,
}

impl RunContext {
    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        command: &str,
        config: impl Serialize,
        seed: Option<u64>,
        inputs: &[&Path],
        outputs: &[&Path],
        manifest_at: PathBuf,
    ) -> Result<(), CliError> {
        let config = serde_json::to_value(config).expect("config serializes");
        let manifest = RunManifest {
            command: command.to_string(),
            argv: self.argv.clone(),
            config_hash: config_hash(&config),
            config,
            seed,
            inputs: manifest::digest_inputs(inputs)?,
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            wall_time_secs: self.started.elapsed().as_secs_f64(),
            versions: manifest::versions(),
        };
        manifest.write(&manifest_at)
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(path, contents).map_err(|e| CliError::write(path, e))
}

fn require(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Data(format!("{}: no such file or directory", path.display())))
    }
}

fn ingest(a: IngestArgs, ctx: &RunContext) -> Result<(), CliError> {
    require(&a.stripped)?;
    require(&a.keywords)?;
    let records = corpus::parse_stripped_file(&a.stripped).map_err(|e| CliError::data(&a.stripped, e))?;
    let keywords = corpus::parse_keywords_file(&a.keywords).map_err(|e| CliError::data(&a.keywords, e))?;
    let total = records.len();
    let kept = corpus::filter_corpus(records, &keywords);
    create_dir(&a.out)?;
    let out = a.out.join(CORPUS_FILE);
    write_file(&out, corpus::serialize_stripped(&kept).as_bytes())?;
    eprintln!("ingested {total} records, kept {} after filtering", kept.len());
    let config = serde_json::json!({
        "min_terms": corpus::MIN_TERMS,
        "excluded_keywords": corpus::EXCLUDED_KEYWORDS,
    });
    ctx.finish("ingest", config, None, &[&a.stripped, &a.keywords], &[&out], manifest_path("ingest", &a.out, true))
}

fn parse_ratios(s: &str) -> Result<[u32; 3], CliError> {
    let parts: Vec<u32> = s
        .split(',')
        .map(|p| p.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("--ratios `{s}`: {e}")))?;
    match parts[..] {
        [a, b, c] if a > 0 && b > 0 && c > 0 => Ok([a, b, c]),
        _ => Err(CliError::Usage(format!("--ratios `{s}`: expected three positive integers"))),
    }
}

fn load_corpus(data: &Path) -> Result<Vec<SequenceRecord>, CliError> {
    let path = data.join(CORPUS_FILE);
    require(&path)?;
    corpus::parse_stripped_file(&path).map_err(|e| CliError::data(&path, e))
}

fn load_split(data: &Path) -> Result<CorpusSplit, CliError> {
    let records = load_corpus(data)?;
    let dir = data.join(SPLIT_DIR);
    require(&dir.join("split.json"))?;
    CorpusSplit::read_manifest(&dir, &records).map_err(|e| CliError::data(&dir, e))
}

fn split_part<'a>(split: &'a CorpusSplit, name: &str) -> Result<&'a [SequenceRecord], CliError> {
    split
        .part(name)
        .ok_or_else(|| CliError::Usage(format!("unknown split `{name}` (expected train, validation or test)")))
}

fn split(a: SplitArgs, ctx: &RunContext) -> Result<(), CliError> {
    let ratios = parse_ratios(&a.ratios)?;
    let records = load_corpus(&a.data)?;
    let split = corpus::split_corpus(records, a.seed, ratios);
    let dir = a.data.join(SPLIT_DIR);
    split.write_manifest(&dir).map_err(|e| CliError::write(&dir, e))?;
    let h = split.header();
    eprintln!("split sizes: train {} / validation {} / test {}", h.counts[0], h.counts[1], h.counts[2]);
    let corpus_path = a.data.join(CORPUS_FILE);
    ctx.finish("split", &h, Some(a.seed), &[&corpus_path], &[&dir], manifest_path("split", &dir, true))
}

/// Merges the model shape: size preset < config file < flags.
pub fn model_config(file: &ModelSection, flags: &ModelArgs) -> Result<ModelConfig, CliError> {
    let size = flags.size.or(file.size).unwrap_or(Size::Small);
    let variant = flags.variant.or(file.variant).unwrap_or(Variant::DualStream);
    let mut cfg = ModelConfig::preset(size, variant);
    if let Some(v) = flags.layers.or(file.layers) {
        cfg.layers = v;
    }
    if let Some(v) = flags.d_model.or(file.d_model) {
        cfg.d_model = v;
    }
    if let Some(v) = flags.heads.or(file.heads) {
        cfg.heads = v;
    }
    if let Some(v) = flags.ffn_mult.or(file.ffn_mult) {
        cfg.ffn_mult = v;
    }
    if let Some(v) = flags.dropout.or(file.dropout) {
        cfg.dropout = v;
    }
    cfg.validate().map_err(|e| CliError::Usage(format!("invalid model configuration: {e}")))?;
    Ok(cfg)
}

/// Appends `metrics.jsonl` lines and writes checkpoints when due.
struct TrainLog {
    out: PathBuf,
    metrics: fs::File,
    verbose: bool,
    total_epochs: usize,
}

impl TrainObserver for TrainLog {
    fn on_epoch(&mut self, record: &EpochRecord, trainer: &Trainer, due: bool) -> Result<(), TrainError> {
        let line = serde_json::to_string(record).expect("epoch record serializes");
        writeln!(self.metrics, "{line}").map_err(|e| TrainError::Observer(format!("{METRICS_FILE}: {e}")))?;
        if self.verbose {
            let val = record.val.map_or(String::new(), |v| format!("  val {:.4}", v.total));
            eprintln!("epoch {:>4}  train {:.4}{val}  lr {:.3e}", record.epoch, record.train.total, record.lr);
        }
        if due {
            let ck = trainer.checkpoint();
            let name = if trainer.epoch == self.total_epochs {
                FINAL_CHECKPOINT.to_string()
            } else {
                format!("epoch-{:04}.ckpt", trainer.epoch)
            };
            ck.save(&self.out.join(name))?;
        }
        Ok(())
    }
}

fn train(a: TrainArgs, ctx: &RunContext) -> Result<(), CliError> {
    let file = ConfigFile::load(a.config.as_deref())?;
    let mut tc = file.train.clone();
    macro_rules! flag {
        ($($f:ident),*) => { $( if let Some(v) = a.$f { tc.$f = v; } )* };
    }
    flag!(epochs, seed, lr, batch_size, grad_accum, mask_p);
    if a.grad_clip.is_some() {
        tc.grad_clip = a.grad_clip;
    }
    if a.checkpoint_every.is_some() {
        tc.checkpoint_every = a.checkpoint_every;
    }
    tc.validate().map_err(|e| CliError::Usage(format!("invalid training configuration: {e}")))?;

    let split = load_split(&a.data)?;
    let mut trainer = match &a.resume {
        Some(path) => {
            require(path)?;
            let ck = Checkpoint::load(path).map_err(|e| CliError::data(path, e))?;
            Trainer::from_checkpoint(&ck, Some(tc.clone())).map_err(|e| CliError::data(path, e))?
        }
        None => {
            let mc = model_config(&file.model, &a.model)?;
            let model = Model::new(mc, tc.seed).map_err(|e| CliError::Usage(e.to_string()))?;
            Trainer::new(model, tc.clone()).map_err(|e| CliError::Usage(e.to_string()))?
        }
    };
    let mc = trainer.model.config.clone();
    let train_set = Dataset::from_records(&split.train, mc.max_len.min(MAX_PREFIX));
    let val_set = Dataset::from_records(&split.validation, mc.max_len.min(MAX_PREFIX));

    create_dir(&a.out)?;
    let metrics_path = a.out.join(METRICS_FILE);
    let metrics = if a.resume.is_some() {
        fs::OpenOptions::new().create(true).append(true).open(&metrics_path)
    } else {
        fs::File::create(&metrics_path)
    }
    .map_err(|e| CliError::write(&metrics_path, e))?;
    let mut log = TrainLog { out: a.out.clone(), metrics, verbose: a.verbose, total_epochs: tc.epochs };
    trainer.fit(&train_set, &val_set, &mut log).map_err(|e| match e {
        TrainError::Config(c) => CliError::Usage(c.to_string()),
        TrainError::EmptyTrainingSet => CliError::Data(format!("{}: training split is empty", a.data.display())),
        other => CliError::Runtime(other.to_string()),
    })?;
    let final_ck = a.out.join(FINAL_CHECKPOINT);
    if !final_ck.exists() {
        trainer.checkpoint().save(&final_ck).map_err(|e| CliError::write(&final_ck, e))?;
    }
    let config = serde_json::json!({ "model": mc, "train": tc });
    let mut inputs: Vec<&Path> = vec![&a.data];
    let split_dir = a.data.join(SPLIT_DIR);
    inputs.push(&split_dir);
    if let Some(r) = &a.resume {
        inputs.push(r);
    }
    ctx.finish("train", config, Some(tc.seed), &inputs, &[&metrics_path, &final_ck], manifest_path("train", &a.out, true))
}

fn load_model(path: &Path) -> Result<Model<f32>, CliError> {
    require(path)?;
    let ck = Checkpoint::load(path).map_err(|e| CliError::data(path, e))?;
    ck.model().map_err(|e| CliError::data(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("value serializes") + "\n";
    write_file(path, text.as_bytes())
}

fn eval(a: EvalArgs, ctx: &RunContext) -> Result<(), CliError> {
    let file = ConfigFile::load(a.config.as_deref())?;
    let mut cfg = file.eval;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(p) = a.mask_p {
        cfg.mask_p = p;
    }
    if !(cfg.mask_p > 0.0 && cfg.mask_p <= 1.0) || cfg.batch_size == 0 || cfg.max_len == 0 {
        return Err(CliError::Usage(format!("invalid eval configuration: {cfg:?}")));
    }
    let model = load_model(&a.checkpoint)?;
    let split = load_split(&a.data)?;
    let records = split_part(&split, &a.split)?;
    let masked = analytics::evaluate_masked(&model, records, &cfg);
    let report =
        EvalReport { split: a.split.clone(), sequences: records.len() as u64, masked: Some(masked), solver: None };
    write_json(&a.out, &report)?;
    eprintln!(
        "mag_acc {:.4}  sign_acc {:.4}  mma {:.4}",
        report.masked.as_ref().map_or(0.0, |m| m.mag_acc),
        report.masked.as_ref().map_or(0.0, |m| m.sign_acc),
        report.masked.as_ref().map_or(0.0, |m| m.mma)
    );
    let split_dir = a.data.join(SPLIT_DIR);
    let corpus_path = a.data.join(CORPUS_FILE);
    ctx.finish(
        "eval",
        &cfg,
        Some(cfg.seed),
        &[&a.checkpoint, &corpus_path, &split_dir],
        &[&a.out],
        manifest_path("eval", &a.out, false),
    )
}

fn parse_topk(s: &str) -> Result<Vec<usize>, CliError> {
    let ks: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("--topk `{s}`: {e}")))?;
    if ks.is_empty() || ks.contains(&0) {
        return Err(CliError::Usage(format!("--topk `{s}`: values must be positive")));
    }
    Ok(ks)
}

fn solver_eval(a: SolverEvalArgs, ctx: &RunContext) -> Result<(), CliError> {
    let file = ConfigFile::load(a.config.as_deref())?;
    let mut cfg = file.solver_eval;
    let mut solver_cfg = file.solver;
    if let Some(n) = a.samples {
        cfg.samples = n;
    }
    if let Some(t) = &a.topk {
        cfg.topk = parse_topk(t)?;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(b) = a.beam {
        solver_cfg.beam_width = b;
    }
    let model = load_model(&a.checkpoint)?;
    let split = load_split(&a.data)?;
    let records = split_part(&split, &a.split)?;
    let solver = analytics::evaluate_solver(&model, records, &cfg, &solver_cfg);
    for (k, acc) in &solver.topk {
        eprintln!("top-{k} {acc:.4}");
    }
    eprintln!("valid rate {:.4}", solver.valid_rate);
    let report = EvalReport { split: a.split.clone(), sequences: records.len() as u64, masked: None, solver: Some(solver) };
    write_json(&a.out, &report)?;
    let split_dir = a.data.join(SPLIT_DIR);
    let corpus_path = a.data.join(CORPUS_FILE);
    let config = serde_json::json!({ "solver_eval": cfg, "solver": solver_cfg });
    ctx.finish(
        "solver-eval",
        config,
        Some(cfg.seed),
        &[&a.checkpoint, &corpus_path, &split_dir],
        &[&a.out],
        manifest_path("solver-eval", &a.out, false),
    )
}

/// Parses `--sequence`: terms with at most one `?`. Without `?` a hidden
/// term is appended. Returns the terms (hidden term as 0) and its position.
pub fn parse_sequence(s: &str) -> Result<(Vec<BigInt>, usize), CliError> {
    let mut terms = Vec::new();
    let mut hidden = None;
    for (i, raw) in s.split(',').map(str::trim).enumerate() {
        if raw == "?" {
            if hidden.replace(i).is_some() {
                return Err(CliError::Usage("--sequence may contain at most one `?`".into()));
            }
            terms.push(BigInt::from(0));
        } else {
            let x: BigInt = raw.parse().map_err(|_| CliError::Usage(format!("--sequence: bad term `{raw}`")))?;
            terms.push(x);
        }
    }
    let pos = match hidden {
        Some(p) => p,
        None => {
            terms.push(BigInt::from(0));
            terms.len() - 1
        }
    };
    Ok((terms, pos))
}

fn solve(a: SolveArgs, ctx: &RunContext) -> Result<(), CliError> {
    let file = ConfigFile::load(a.config.as_deref())?;
    let mut solver_cfg = file.solver;
    if let Some(b) = a.beam {
        solver_cfg.beam_width = b;
    }
    if a.topk == 0 {
        return Err(CliError::Usage("--topk must be positive".into()));
    }
    let (mut terms, mut pos) = parse_sequence(&a.sequence)?;
    let model = load_model(&a.checkpoint)?;
    let max_len = model.config.max_len.min(MAX_PREFIX);
    if terms.len() > max_len {
        // Keep the window of `max_len` terms ending at the hidden one where possible.
        let start = (pos + 1).saturating_sub(max_len).min(terms.len() - max_len);
        terms = terms[start..start + max_len].to_vec();
        pos -= start;
    }
    let enc = Arc::new(EncodedSequence::new(&terms));
    let mask = (0..terms.len()).map(|i| i == pos).collect();
    let sample = MaskedSample::with_mask(enc, mask);
    let pred = model.predict(std::slice::from_ref(&sample)).remove(0).remove(0);
    let query = SolverQuery::from_prediction(&pred, a.topk);
    let result = solver::solve_with(&query, &solver_cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    let text = serde_json::to_string_pretty(&result).expect("result serializes");
    println!("{text}");
    if let Some(out) = &a.out {
        write_file(out, (text + "\n").as_bytes())?;
        let config = serde_json::json!({ "solver": solver_cfg, "topk": a.topk, "sequence": a.sequence });
        ctx.finish("solve", config, None, &[&a.checkpoint], &[out], manifest_path("solve", out, false))?;
    }
    Ok(())
}

fn read_report(path: &Path) -> Result<EvalReport, CliError> {
    require(path)?;
    let bytes = fs::read(path).map_err(|e| CliError::data(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::data(path, e))
}

fn spectrum(a: SpectrumArgs, ctx: &RunContext) -> Result<(), CliError> {
    let report = read_report(&a.report)?;
    let masked = report
        .masked
        .as_ref()
        .ok_or_else(|| CliError::Data(format!("{}: report has no masked-evaluation section", a.report.display())))?;
    let rows = analytics::spectrum(masked);
    let mut buf = Vec::new();
    analytics::write_spectrum_csv(&rows, &mut buf).expect("writing to memory");
    write_file(&a.out, &buf)?;
    match analytics::totient_correlation(&rows) {
        Ok(c) => eprintln!("pearson(NIG, phi(m)/m) r = {:.4}, p = {:.3e} (n = {})", c.r, c.p_value, c.n),
        Err(e) => eprintln!("correlation unavailable: {e}"),
    }
    ctx.finish("spectrum", serde_json::json!({}), None, &[&a.report], &[&a.out], manifest_path("spectrum", &a.out, false))
}

/// Markdown summary of one report.
pub fn summarize_report(name: &str, r: &EvalReport) -> String {
    let mut s = format!("## {name}\n\nsplit: {}, sequences: {}\n\n", r.split, r.sequences);
    if let Some(m) = &r.masked {
        s += &format!(
            "| metric | value |\n|---|---|\n| masked positions | {} |\n| Mag Acc | {:.4} |\n| Sign Acc | {:.4} |\n| MMA | {:.4} |\n| mean NIG | {:.4} |\n\n",
            m.masked_positions,
            m.mag_acc,
            m.sign_acc,
            m.mma,
            analytics::mean(&m.per_modulus_nig)
        );
        s += "| bucket | positions | MSE |\n|---|---|---|\n";
        for (b, mse) in &m.bucket_mse {
            s += &format!("| {b} | {} | {mse:.4} |\n", m.bucket_counts.get(b).copied().unwrap_or(0));
        }
        s += "\n";
        let rows = analytics::spectrum(m);
        if let Ok(c) = analytics::totient_correlation(&rows) {
            s += &format!("Pearson r(NIG, φ(m)/m) = {:.4} (p = {:.3e}, n = {})\n\n", c.r, c.p_value, c.n);
        }
    }
    if let Some(sv) = &r.solver {
        s += &format!("Solver samples: {}, valid rate: {:.4}\n\n| k | Top-k |\n|---|---|\n", sv.samples, sv.valid_rate);
        for (k, acc) in &sv.topk {
            s += &format!("| {k} | {acc:.4} |\n");
        }
        s += "\n| mode | calls | fraction | Top-1 |\n|---|---|---|---|\n";
        for (mode, st) in &sv.mode_breakdown {
            s += &format!("| {mode} | {} | {:.4} | {:.4} |\n", st.calls, st.fraction, st.top1);
        }
        s += "\n";
    }
    s
}

fn report(a: ReportArgs, ctx: &RunContext) -> Result<(), CliError> {
    let mut text = String::from("# Evaluation summary\n\n");
    for path in &a.reports {
        let r = read_report(path)?;
        r.check_invariants().map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        text += &summarize_report(&path.display().to_string(), &r);
    }
    write_file(&a.out, text.as_bytes())?;
    let inputs: Vec<&Path> = a.reports.iter().map(PathBuf::as_path).collect();
    ctx.finish("report", serde_json::json!({}), None, &inputs, &[&a.out], manifest_path("report", &a.out, false))
}
