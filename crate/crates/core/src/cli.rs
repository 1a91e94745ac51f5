//! `dynser` command line: fixtures, feature extraction, training,
//! cross-validation and evaluation.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::audio::MfccConfig;
use crate::data::{self, DatasetManifest, Streams};
use crate::error::{Error, Result};
use crate::models::{build_model, InputDims, Model, ModelHyper, ModelVariant};
use crate::train::{self, CvReport, Dataset, History, MetricsReport, TrainConfig};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "dynser", version, about = "Speech emotion recognition with Dynamic-CBAM and Bi-GRU")]
pub struct Cli {
    /// Only print errors.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic five-class WAV corpus and its manifest.
    GenFixtures {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        count: usize,
    },
    /// Compute and cache features for every manifest clip.
    Extract(RunArgs),
    /// Train on one fold split and write a checkpoint plus report.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Held-out fold of the stratified plan.
        #[arg(long, default_value_t = 0)]
        fold: usize,
    },
    /// Stratified k-fold cross-validation.
    Crossvalidate(RunArgs),
    /// Score a saved checkpoint on the manifest.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

/// Overrides applied on top of the config file.
#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub manifest: PathBuf,
    /// Directory the manifest paths are relative to; defaults to the
    /// manifest's own directory.
    pub root: Option<PathBuf>,
    /// Feature cache; `$DYNSER_CACHE_DIR` wins when set.
    pub cache: PathBuf,
    pub out: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            manifest: PathBuf::from("manifest.csv"),
            root: None,
            cache: PathBuf::from("cache"),
            out: PathBuf::from("runs"),
        }
    }
}

/// Everything a run depends on. Serialized into every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub variant: ModelVariant,
    pub audio: MfccConfig,
    pub model: ModelHyper,
    pub train: TrainConfig,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            variant: ModelVariant::Proposed,
            audio: MfccConfig::default(),
            model: ModelHyper::default(),
            train: TrainConfig::default(),
            paths: Paths::default(),
        }
    }
}

impl RunConfig {
    /// Defaults, then the config file, then flags.
    pub fn resolve(args: &RunArgs) -> Result<RunConfig> {
        let mut cfg = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(v) = &args.variant {
            cfg.variant = v.parse()?;
        }
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        if let Some(m) = &args.manifest {
            cfg.paths.manifest = m.clone();
        }
        if let Some(o) = &args.out {
            cfg.paths.out = o.clone();
        }
        if let Some(e) = args.epochs {
            cfg.train.epochs = e;
        }
        if let Some(k) = args.folds {
            cfg.train.k_folds = k;
        }
        cfg.finish()?;
        log::debug!("resolved config: {}", serde_json::to_string(&cfg)?);
        Ok(cfg)
    }

    /// Derives dependent fields and validates.
    pub fn finish(&mut self) -> Result<()> {
        self.train.seed = self.seed;
        self.audio.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.model.input = InputDims {
            n_mfcc: self.audio.n_mfcc,
            frames: self.audio.frames(),
            wave_samples: self.audio.clip_len(),
        };
        self.model.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.train.validate()
    }

    pub fn cache_dir(&self) -> PathBuf {
        data::cache_dir(&self.paths.cache)
    }

    pub fn manifest(&self) -> Result<DatasetManifest> {
        data::load_manifest(&self.paths.manifest, self.paths.root.as_deref())
    }

    fn streams(&self) -> Streams {
        Streams {
            mfcc: self.variant.uses_mfcc(),
            wave: self.variant.uses_wave(),
        }
    }

    pub fn dataset(&self, manifest: &DatasetManifest) -> Result<Dataset> {
        data::load_dataset(manifest, &self.audio, &self.cache_dir(), self.streams())
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    config: &'a RunConfig,
    variant_description: &'a str,
    parameters: usize,
    seeds: Vec<u64>,
    wall_clock_seconds: f64,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
struct TrainBody<'a> {
    fold: usize,
    train_size: usize,
    test_size: usize,
    metrics: &'a MetricsReport,
    history: &'a History,
    checkpoint: &'a Path,
}

#[derive(Serialize)]
struct EvalBody<'a> {
    checkpoint: &'a Path,
    samples: usize,
    metrics: &'a MetricsReport,
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::file(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, serde_json::to_string_pretty(value)?.as_bytes())
}

/// `fold,epoch,train_loss,test_ua,test_wa,test_f1`; unscored epochs leave
/// the metric cells empty.
pub fn write_history_csv(path: &Path, runs: &[(usize, &History)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["fold", "epoch", "train_loss", "test_ua", "test_wa", "test_f1"])?;
    let cell = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for (fold, h) in runs {
        for e in &h.epochs {
            w.write_record([
                fold.to_string(),
                e.epoch.to_string(),
                e.train_loss.to_string(),
                cell(e.test_ua),
                cell(e.test_wa),
                cell(e.test_f1),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.paths.out.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::file(&dir, e))?;
    Ok(dir)
}

pub fn cmd_extract(cfg: &RunConfig) -> Result<data::ExtractSummary> {
    let manifest = cfg.manifest()?;
    let dir = cfg.cache_dir();
    let summary = data::extract_features(&manifest, &cfg.audio, &dir)?;
    log::info!(
        "{}: {} written, {} up to date, {} failed",
        dir.display(),
        summary.written,
        summary.skipped,
        summary.failed.len()
    );
    Ok(summary)
}

/// Trains on every fold but `fold` and writes `checkpoint.bin`,
/// `report.json`, `history.csv` and `confusion.txt` under `paths.out`.
pub fn cmd_train(cfg: &RunConfig, fold: usize) -> Result<MetricsReport> {
    let start = Instant::now();
    let manifest = cfg.manifest()?;
    let data = cfg.dataset(&manifest)?;
    let plan = train::stratified_kfold(&data.labels(), cfg.train.k_folds, cfg.seed)?;
    let (train_idx, test_idx) = plan.split(fold)?;
    let mut model = build_model(cfg.variant, &cfg.model, cfg.seed)?;
    let history = train::train(&mut model, &data, &train_idx, &test_idx, &cfg.train)?;
    let (_, metrics) = train::evaluate(&model, &data, &test_idx, cfg.train.batch_size)?;
    let dir = out_dir(cfg)?;
    let ckpt = dir.join("checkpoint.bin");
    model.save(&ckpt)?;
    let report = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "train",
        config: cfg,
        variant_description: cfg.variant.description(),
        parameters: model.num_parameters(),
        seeds: vec![cfg.seed],
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        body: TrainBody {
            fold,
            train_size: train_idx.len(),
            test_size: test_idx.len(),
            metrics: &metrics,
            history: &history,
            checkpoint: &ckpt,
        },
    };
    write_json(&dir.join("report.json"), &report)?;
    write_history_csv(&dir.join("history.csv"), &[(fold, &history)])?;
    write_file(&dir.join("confusion.txt"), metrics.confusion.render().as_bytes())?;
    Ok(metrics)
}

/// Writes `cv_report.json`, `history.csv` and the pooled `confusion.txt`.
pub fn cmd_crossvalidate(cfg: &RunConfig) -> Result<CvReport> {
    let start = Instant::now();
    let manifest = cfg.manifest()?;
    let data = cfg.dataset(&manifest)?;
    let report = train::cross_validate(cfg.variant, &cfg.model, &data, &cfg.train)?;
    let dir = out_dir(cfg)?;
    let parameters = build_model(cfg.variant, &cfg.model, cfg.seed)?.num_parameters();
    let doc = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "crossvalidate",
        config: cfg,
        variant_description: cfg.variant.description(),
        parameters,
        seeds: report.folds.iter().map(|f| f.seed).collect(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        body: &report,
    };
    write_json(&dir.join("cv_report.json"), &doc)?;
    let runs: Vec<(usize, &History)> = report.folds.iter().map(|f| (f.fold, &f.history)).collect();
    write_history_csv(&dir.join("history.csv"), &runs)?;
    let mut text = String::from("pooled confusion matrix\n");
    text.push_str(&report.pooled.confusion.render());
    for f in &report.folds {
        text.push_str(&format!("\nfold {} (UA {:.4}, WA {:.4})\n", f.fold, f.metrics.ua, f.metrics.wa));
        text.push_str(&f.metrics.confusion.render());
    }
    write_file(&dir.join("confusion.txt"), text.as_bytes())?;
    Ok(report)
}

/// Eval-mode scoring of a checkpoint over the whole manifest.
pub fn cmd_evaluate(cfg: &RunConfig, checkpoint: &Path) -> Result<MetricsReport> {
    let start = Instant::now();
    let model = Model::load(checkpoint)?;
    if model.arch.variant != cfg.variant {
        return Err(Error::InputContract(format!(
            "checkpoint {} holds variant {} but the config selects {}",
            checkpoint.display(),
            model.arch.variant,
            cfg.variant
        )));
    }
    let manifest = cfg.manifest()?;
    let data = cfg.dataset(&manifest)?;
    let idx: Vec<usize> = (0..data.len()).collect();
    let (_, metrics) = train::evaluate(&model, &data, &idx, cfg.train.batch_size)?;
    let dir = out_dir(cfg)?;
    let report = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "evaluate",
        config: cfg,
        variant_description: cfg.variant.description(),
        parameters: model.num_parameters(),
        seeds: vec![model.seed],
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        body: EvalBody {
            checkpoint,
            samples: data.len(),
            metrics: &metrics,
        },
    };
    write_json(&dir.join("eval_report.json"), &report)?;
    write_file(&dir.join("confusion.txt"), metrics.confusion.render().as_bytes())?;
    Ok(metrics)
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::GenFixtures { out: dir, seed, count } => {
            let m = data::gen_fixtures(dir, *seed, *count)?;
            writeln!(out, "wrote {} clips to {}, histogram {:?}", m.len(), dir.display(), m.histogram())?;
            Ok(0)
        }
        Command::Extract(args) => {
            let cfg = RunConfig::resolve(args)?;
            let s = cmd_extract(&cfg)?;
            writeln!(out, "{} written, {} up to date, {} failed", s.written, s.skipped, s.failed.len())?;
            for (path, err) in &s.failed {
                writeln!(out, "  {path}: {err}")?;
            }
            Ok(if s.failed.is_empty() { 0 } else { 2 })
        }
        Command::Train { run, fold } => {
            let cfg = RunConfig::resolve(run)?;
            let m = cmd_train(&cfg, *fold)?;
            writeln!(out, "fold {fold}: UA {:.4} WA {:.4} macro-F1 {:.4}", m.ua, m.wa, m.macro_f1)?;
            Ok(0)
        }
        Command::Crossvalidate(args) => {
            let cfg = RunConfig::resolve(args)?;
            let r = cmd_crossvalidate(&cfg)?;
            for f in &r.folds {
                writeln!(out, "fold {}: UA {:.4} WA {:.4}", f.fold, f.metrics.ua, f.metrics.wa)?;
            }
            writeln!(out, "mean: UA {:.4} WA {:.4} macro-F1 {:.4}", r.mean.ua, r.mean.wa, r.mean.macro_f1)?;
            Ok(0)
        }
        Command::Evaluate { run, checkpoint } => {
            let cfg = RunConfig::resolve(run)?;
            let m = cmd_evaluate(&cfg, checkpoint)?;
            writeln!(out, "UA {:.4} WA {:.4} macro-F1 {:.4}", m.ua, m.wa, m.macro_f1)?;
            Ok(0)
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 success, 1 usage or config error, 2 data error, 3 numeric failure.
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
    let level = if cli.quiet { "error" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    let stdout = std::io::stdout();
    let mut sink: Box<dyn Write> = if cli.quiet { Box::new(std::io::sink()) } else { Box::new(stdout.lock()) };
    match execute(&cli, &mut sink) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
