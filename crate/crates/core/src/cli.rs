//! Command-line front end: run configuration, subcommands and the on-disk
//! layout of their outputs.
//!
//! ```text
//! <root>/corpus/                        manifest.tsv, corpus.json, wav/
//! <root>/initial/seed-<s>/              model.ckpt, report.csv, summary.csv, config.toml
//! <root>/scores/seed-<s>/<metric>.tsv   one score per pool utterance
//! <root>/runs/<variant>/budget-<b>/seed-<s>/
//! <root>/report/                        summary.csv, pivot.csv, curves.csv, pcer/
//! ```

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::corpus::{self, Corpus, CorpusConfig, Split, SplitSizes};
use crate::error::{Error, Result};
use crate::model::Seq2Seq;
use crate::pipeline::{
    median, pivot_summaries, read_report, read_summary, run_pipeline_from, score_pool, train_initial, write_summary,
    EpochRow, EpochStats, InitialOutcome, PipelineConfig, Prepared, SummaryRow, UncertaintyMetric, Variant,
};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "ALCR_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "alcr-out";
/// Effective configuration echoed into the output root by every command.
pub const EFFECTIVE_CONFIG_FILE: &str = "run-config.toml";

/// Corpus settings; the seed comes from [`RunConfig::seed`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusSettings {
    pub sizes: SplitSizes,
    pub min_len: usize,
    pub max_len: usize,
    pub heterogeneous: bool,
}

impl Default for CorpusSettings {
    fn default() -> Self {
        let c = CorpusConfig::default();
        Self {
            sizes: c.sizes,
            min_len: c.min_len,
            max_len: c.max_len,
            heterogeneous: c.heterogeneous,
        }
    }
}

/// Cells executed by `run`: every variant at every budget for every seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grid {
    pub variants: Vec<Variant>,
    pub budgets: Vec<f64>,
    /// Empty means the global seed only.
    pub seeds: Vec<u64>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            variants: vec![Variant::Hls],
            budgets: vec![0.1],
            seeds: Vec::new(),
        }
    }
}

/// Contents of the TOML configuration file. Every section is optional and
/// unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub output_dir: Option<PathBuf>,
    /// Corpus generation seed and default training seed.
    pub seed: u64,
    pub corpus: CorpusSettings,
    /// Base settings for every grid cell, model and frontend included.
    pub pipeline: PipelineConfig,
    pub grid: Grid,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.corpus_config().validate()?;
        self.pipeline.validate()?;
        if self.grid.variants.is_empty() || self.grid.budgets.is_empty() {
            return Err(Error::Config("grid needs at least one variant and one budget".into()));
        }
        for &b in &self.grid.budgets {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::Config(format!("budget {b} outside [0, 1]")));
            }
        }
        for v in &self.grid.variants {
            if let Some(p) = v.policy() {
                p.validate()?;
            }
        }
        Ok(())
    }

    pub fn corpus_config(&self) -> CorpusConfig {
        CorpusConfig {
            seed: self.seed,
            sizes: self.corpus.sizes,
            min_len: self.corpus.min_len,
            max_len: self.corpus.max_len,
            heterogeneous: self.corpus.heterogeneous,
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        if self.grid.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.grid.seeds.clone()
        }
    }

    /// Pipeline settings of one grid cell.
    pub fn cell(&self, variant: Variant, budget: f64, seed: u64) -> PipelineConfig {
        PipelineConfig {
            variant,
            budget_fraction: budget,
            seed,
            ..self.pipeline.clone()
        }
    }

    /// Flag, then file, then environment, then the built-in default.
    pub fn output_root(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
    }
}

pub fn corpus_dir(root: &Path) -> PathBuf {
    root.join("corpus")
}

pub fn initial_dir(root: &Path, seed: u64) -> PathBuf {
    root.join("initial").join(format!("seed-{seed}"))
}

pub fn scores_path(root: &Path, seed: u64, metric: UncertaintyMetric) -> PathBuf {
    root.join("scores")
        .join(format!("seed-{seed}"))
        .join(format!("{}.tsv", metric_name(metric)))
}

pub fn run_dir(root: &Path, variant: &Variant, budget: f64, seed: u64) -> PathBuf {
    root.join("runs")
        .join(variant.to_string())
        .join(format!("budget-{budget}"))
        .join(format!("seed-{seed}"))
}

pub fn report_dir(root: &Path) -> PathBuf {
    root.join("report")
}

fn metric_name(m: UncertaintyMetric) -> &'static str {
    match m {
        UncertaintyMetric::Pprob => "pprob",
        UncertaintyMetric::OracleLoss => "oracle_loss",
        UncertaintyMetric::OracleCer => "oracle_cer",
        UncertaintyMetric::Random => "random",
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "alcr",
    version,
    about = "Active learning, pseudo-labeling and consistency training on a synthetic ASR corpus"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Output root [default: config output_dir, then $ALCR_OUTPUT_ROOT, then ./alcr-out]
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the corpus (WAVs and manifest) under <root>/corpus.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Corpus seed, overriding the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Use the shifted-vocabulary corpus.
        #[arg(long)]
        heterogeneous: bool,
    },
    /// Train the initial model on the initial split.
    TrainInitial {
        #[command(flatten)]
        common: Common,
        /// Training seeds, overriding the grid.
        #[arg(long = "seed")]
        seeds: Vec<u64>,
    },
    /// Score the unlabeled pool with the initial model.
    Score {
        #[command(flatten)]
        common: Common,
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        /// pprob, oracle_loss, oracle_cer or random.
        #[arg(long)]
        metric: Option<UncertaintyMetric>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the pipeline for every (variant, budget, seed) cell.
    Run {
        #[command(flatten)]
        common: Common,
        /// Variant name such as hls, pls, cr-sa or cr_filtered-sa; repeatable.
        #[arg(long = "variant")]
        variants: Vec<Variant>,
        /// Labeling budget as a fraction of pool duration; repeatable.
        #[arg(long = "budget")]
        budgets: Vec<f64>,
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        /// Threads for decoding and scoring.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Aggregate every finished run into summary, pivot and curve files.
    Report {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(1),
            CliError::Runtime(_) => ExitCode::from(2),
        }
    }
}

/// Config problems are the caller's fault; everything else is a runtime
/// failure.
fn usage(e: Error) -> CliError {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => CliError::Usage(e.to_string()),
        other => CliError::Runtime(other),
    }
}

/// Parses `args` (program name first), runs the command and maps the outcome
/// to an exit code. Results go to `out`, diagnostics to stderr.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command, out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    match &common.config {
        Some(p) => RunConfig::load(p).map_err(usage),
        None => Ok(RunConfig::default()),
    }
}

/// Validates the merged settings and echoes them into the output root.
fn finish_config(cfg: &RunConfig, root: &Path) -> Result<(), CliError> {
    cfg.validate().map_err(usage)?;
    fs::create_dir_all(root).map_err(Error::from)?;
    fs::write(root.join(EFFECTIVE_CONFIG_FILE), cfg.to_toml()?).map_err(Error::from)?;
    Ok(())
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Synth {
            common,
            seed,
            heterogeneous,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.corpus.heterogeneous |= heterogeneous;
            let root = cfg.output_root(common.out.as_deref());
            finish_config(&cfg, &root)?;
            cmd_synth(&cfg, &root, out)?;
        }
        Command::TrainInitial { common, seeds } => {
            let mut cfg = load_config(&common)?;
            if !seeds.is_empty() {
                cfg.grid.seeds = seeds;
            }
            let root = cfg.output_root(common.out.as_deref());
            finish_config(&cfg, &root)?;
            cmd_train_initial(&cfg, &root, out)?;
        }
        Command::Score {
            common,
            seeds,
            metric,
            workers,
        } => {
            let mut cfg = load_config(&common)?;
            if !seeds.is_empty() {
                cfg.grid.seeds = seeds;
            }
            if let Some(m) = metric {
                cfg.pipeline.metric = m;
            }
            if let Some(w) = workers {
                cfg.pipeline.workers = w;
            }
            let root = cfg.output_root(common.out.as_deref());
            finish_config(&cfg, &root)?;
            cmd_score(&cfg, &root, out)?;
        }
        Command::Run {
            common,
            variants,
            budgets,
            seeds,
            workers,
        } => {
            let mut cfg = load_config(&common)?;
            if !variants.is_empty() {
                cfg.grid.variants = variants;
            }
            if !budgets.is_empty() {
                cfg.grid.budgets = budgets;
            }
            if !seeds.is_empty() {
                cfg.grid.seeds = seeds;
            }
            if let Some(w) = workers {
                cfg.pipeline.workers = w;
            }
            let root = cfg.output_root(common.out.as_deref());
            finish_config(&cfg, &root)?;
            cmd_run(&cfg, &root, out)?;
        }
        Command::Report { common } => {
            let cfg = load_config(&common)?;
            let root = cfg.output_root(common.out.as_deref());
            cmd_report(&root, out)?;
        }
    }
    Ok(())
}

pub fn cmd_synth(cfg: &RunConfig, root: &Path, out: &mut dyn Write) -> Result<Corpus> {
    let corpus = corpus::generate_corpus(&cfg.corpus_config(), &corpus_dir(root))?;
    writeln!(out, "corpus written to {}", corpus_dir(root).display())?;
    for split in Split::ALL {
        writeln!(
            out,
            "{:<10} {:>5} utterances {:>9.1} s",
            split.name(),
            corpus.manifest.split(split).count(),
            corpus.manifest.total_duration(split)
        )?;
    }
    Ok(corpus)
}

/// Loads the corpus under `root`, refusing one generated with other settings.
pub fn open_corpus(cfg: &RunConfig, root: &Path) -> Result<Corpus> {
    let dir = corpus_dir(root);
    if !dir.join(corpus::MANIFEST_FILE).exists() {
        return Err(Error::InvalidArgument(format!(
            "no corpus at {}; run `alcr synth` first",
            dir.display()
        )));
    }
    let corpus = corpus::load_corpus(&dir)?;
    if corpus.manifest.config != cfg.corpus_config() {
        return Err(Error::Config(format!(
            "corpus at {} was generated with different settings",
            dir.display()
        )));
    }
    Ok(corpus)
}

/// Reuses a checkpoint from `train-initial` when its settings match, and
/// trains (and saves) one otherwise.
pub fn initial_model(cfg: &PipelineConfig, prepared: &Prepared, root: &Path) -> Result<InitialOutcome> {
    let dir = initial_dir(root, cfg.seed);
    if let Some(found) = load_initial(cfg, &dir)? {
        return Ok(found);
    }
    let initial = train_initial(prepared, cfg)?;
    save_initial(cfg, prepared, &initial, &dir)?;
    Ok(initial)
}

fn initial_cell(cfg: &PipelineConfig) -> PipelineConfig {
    PipelineConfig {
        variant: Variant::InitialOnly,
        ..cfg.clone()
    }
}

fn save_initial(cfg: &PipelineConfig, prepared: &Prepared, initial: &InitialOutcome, dir: &Path) -> Result<()> {
    let cell = initial_cell(cfg);
    run_pipeline_from(&cell, prepared, initial)?.write_to(dir, &cell)
}

fn load_initial(cfg: &PipelineConfig, dir: &Path) -> Result<Option<InitialOutcome>> {
    let cfg_path = dir.join("config.toml");
    if !cfg_path.exists() || !dir.join("model.ckpt").exists() {
        return Ok(None);
    }
    let stored: PipelineConfig =
        toml::from_str(&fs::read_to_string(&cfg_path)?).map_err(|e| Error::Config(e.to_string()))?;
    if stored.initial_key() != cfg.initial_key() {
        return Ok(None);
    }
    let model = Seq2Seq::load(&dir.join("model.ckpt"))?;
    let rows = read_report(&dir.join("report.csv"))?;
    let summary = read_summary(&dir.join("summary.csv"))?;
    let Some(test_cer) = summary.first().map(|s| s.final_cer) else {
        return Ok(None);
    };
    let epochs = rows
        .iter()
        .map(|r| EpochStats {
            epoch: r.epoch,
            lr: r.lr.unwrap_or(0.0),
            loss_sup: r.loss_sup.unwrap_or(f64::NAN),
            loss_cr: r.loss_cr,
            batches: Vec::new(),
        })
        .collect();
    Ok(Some(InitialOutcome {
        model,
        epochs,
        test_cer,
    }))
}

pub fn cmd_train_initial(cfg: &RunConfig, root: &Path, out: &mut dyn Write) -> Result<()> {
    let corpus = open_corpus(cfg, root)?;
    let prepared = Prepared::new(&corpus, &cfg.pipeline.frontend)?;
    for seed in cfg.seeds() {
        let cell = cfg.cell(Variant::InitialOnly, cfg.pipeline.budget_fraction, seed);
        let initial = train_initial(&prepared, &cell)?;
        let dir = initial_dir(root, seed);
        save_initial(&cell, &prepared, &initial, &dir)?;
        let first = initial.epochs.first().map_or(f64::NAN, |e| e.loss_sup);
        let last = initial.epochs.last().map_or(f64::NAN, |e| e.loss_sup);
        writeln!(
            out,
            "seed {seed}: loss {first:.4} -> {last:.4}, test CER {:.2}% ({})",
            initial.test_cer,
            dir.display()
        )?;
    }
    Ok(())
}

pub fn cmd_score(cfg: &RunConfig, root: &Path, out: &mut dyn Write) -> Result<()> {
    let corpus = open_corpus(cfg, root)?;
    let prepared = Prepared::new(&corpus, &cfg.pipeline.frontend)?;
    for seed in cfg.seeds() {
        let cell = cfg.cell(Variant::InitialOnly, cfg.pipeline.budget_fraction, seed);
        let initial = initial_model(&cell, &prepared, root)?;
        let scores = score_pool(&initial.model, &prepared, cell.metric, &cell.beam, cell.workers, seed)?;
        let path = scores_path(root, seed, cell.metric);
        fs::create_dir_all(path.parent().expect("scores path has a parent"))?;
        let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_path(&path)?;
        w.write_record(["id", "score"])?;
        for (&i, s) in prepared.pool.iter().zip(&scores) {
            w.write_record([prepared.utterance(i).id.as_str(), &s.to_string()])?;
        }
        w.flush()?;
        let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        writeln!(
            out,
            "seed {seed}: {} scores in [{lo:.4}, {hi:.4}] -> {}",
            scores.len(),
            path.display()
        )?;
    }
    Ok(())
}

pub fn cmd_run(cfg: &RunConfig, root: &Path, out: &mut dyn Write) -> Result<Vec<SummaryRow>> {
    let corpus = open_corpus(cfg, root)?;
    let prepared = Prepared::new(&corpus, &cfg.pipeline.frontend)?;
    let mut summaries = Vec::new();
    for seed in cfg.seeds() {
        let initial = initial_model(&cfg.cell(Variant::InitialOnly, 0.0, seed), &prepared, root)?;
        for &budget in &cfg.grid.budgets {
            for variant in &cfg.grid.variants {
                let cell = cfg.cell(variant.clone(), budget, seed);
                let outcome = run_pipeline_from(&cell, &prepared, &initial)?;
                for w in &outcome.warnings {
                    eprintln!("warning: {variant} budget {budget} seed {seed}: {w}");
                }
                let dir = run_dir(root, variant, budget, seed);
                outcome.write_to(&dir, &cell)?;
                let s = &outcome.report.summary;
                writeln!(
                    out,
                    "{:<16} budget {:<6} seed {:<4} final CER {:>6.2}%",
                    s.variant, s.budget_fraction, s.seed, s.final_cer
                )?;
                summaries.push(s.clone());
            }
        }
    }
    Ok(summaries)
}

fn find_files(dir: &Path, name: &str, found: &mut Vec<PathBuf>) -> Result<()> {
    if !dir.is_dir() {
        return Ok(());
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            find_files(&p, name, found)?;
        } else if p.file_name().is_some_and(|n| n == name) {
            found.push(p);
        }
    }
    Ok(())
}

/// Everything `report` writes, also returned for inspection.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub summaries: Vec<SummaryRow>,
    pub rows: Vec<EpochRow>,
}

/// Collects every run under `<root>/runs`.
pub fn collect_runs(root: &Path) -> Result<Aggregate> {
    let runs = root.join("runs");
    let mut summary_files = Vec::new();
    find_files(&runs, "summary.csv", &mut summary_files)?;
    let mut summaries = Vec::new();
    let mut rows = Vec::new();
    for path in &summary_files {
        summaries.extend(read_summary(path)?);
        let report = path.with_file_name("report.csv");
        if report.exists() {
            rows.extend(read_report(&report)?);
        }
    }
    if summaries.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no run reports under {}",
            runs.display()
        )));
    }
    Ok(Aggregate { summaries, rows })
}

pub fn cmd_report(root: &Path, out: &mut dyn Write) -> Result<Aggregate> {
    let agg = collect_runs(root)?;
    let dir = report_dir(root);
    fs::create_dir_all(dir.join("pcer"))?;
    write_summary(&dir.join("summary.csv"), &agg.summaries)?;
    let pivot = pivot_summaries(&agg.summaries);
    fs::write(dir.join("pivot.csv"), pivot.to_csv()?)?;

    let mut w = csv::Writer::from_path(dir.join("curves.csv"))?;
    for r in &agg.rows {
        w.serialize(r)?;
    }
    w.flush()?;

    // per (variant, budget): epoch x seed P-CER table plus the median
    let mut groups: BTreeMap<(String, u64), Vec<&EpochRow>> = BTreeMap::new();
    for r in &agg.rows {
        groups
            .entry((r.variant.clone(), r.budget_fraction.to_bits()))
            .or_default()
            .push(r);
    }
    let mut curves = 0;
    for ((variant, budget_bits), rows) in &groups {
        if rows.iter().all(|r| r.p_cer.is_none()) {
            continue;
        }
        let budget = f64::from_bits(*budget_bits);
        let mut seeds: Vec<u64> = rows.iter().map(|r| r.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        let mut epochs: BTreeMap<usize, BTreeMap<u64, f64>> = BTreeMap::new();
        for r in rows {
            if let Some(p) = r.p_cer {
                epochs.entry(r.epoch).or_default().insert(r.seed, p);
            }
        }
        let path = dir.join("pcer").join(format!("{variant}_budget-{budget}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = vec!["epoch".to_string()];
        header.extend(seeds.iter().map(|s| format!("seed-{s}")));
        header.push("median".into());
        w.write_record(&header)?;
        for (epoch, by_seed) in &epochs {
            let mut rec = vec![epoch.to_string()];
            rec.extend(
                seeds
                    .iter()
                    .map(|s| by_seed.get(s).map(|v| v.to_string()).unwrap_or_default()),
            );
            let vals: Vec<f64> = by_seed.values().copied().collect();
            rec.push(median(&vals).map(|m| m.to_string()).unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush()?;
        curves += 1;
    }

    writeln!(out, "median final CER (%) over seeds")?;
    write!(out, "{:>8}", "budget")?;
    for v in &pivot.variants {
        write!(out, " {v:>14}")?;
    }
    writeln!(out)?;
    for (b, cells) in pivot.budgets.iter().zip(&pivot.cells) {
        write!(out, "{b:>8}")?;
        for c in cells {
            match c {
                Some(v) => write!(out, " {v:>14.2}")?,
                None => write!(out, " {:>14}", "")?,
            }
        }
        writeln!(out)?;
    }
    writeln!(
        out,
        "{} runs, {curves} P-CER curve files under {}",
        agg.summaries.len(),
        dir.display()
    )?;
    Ok(agg)
}
