use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use genbias_core::metrics::Metric;
use genbias_core::pairgen::Method;

use crate::config::{BackendSpec, PartialConfig, RunConfig};
use crate::error::Result;
use crate::pipeline;
use crate::report::{self, RunReport};

#[derive(Debug, Parser)]
#[command(name = "genbias", version, about = "Gender bias evaluation for masked language models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a corpus into male-only, female-only, multi-gender and neutral sentences.
    Extract(RunArgs),
    /// Measure lexicon coverage on a parallel corpus sample.
    Coverage(RunArgs),
    /// Generate counterfactual sentence pairs.
    Pairs(RunArgs),
    /// Generate pairs and compute bias metrics.
    Eval(RunArgs),
    /// Top-k coverage curve of gendered fill-mask predictions.
    SweepK(RunArgs),
    /// Summarize a saved run report and export its CSV series.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML config file, or an earlier run report to repeat.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lang: Option<String>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Target-language lexicon for coverage.
    #[arg(long)]
    pub lexicon_tgt: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Line-aligned translation of --corpus.
    #[arg(long)]
    pub corpus_tgt: Option<PathBuf>,
    /// File of sentence ids (0-based line numbers) to skip.
    #[arg(long)]
    pub stoplist: Option<PathBuf>,
    /// table:<fixture.json> or http:<url>
    #[arg(long)]
    pub backend: Option<BackendSpec>,
    #[arg(long)]
    pub method: Option<Method>,
    /// Comma-separated subset of mbe,sbm,dbm.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<Metric>>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for backend requests (default: logical cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub max_tokens: Option<usize>,
    /// Per-request timeout in seconds.
    #[arg(long = "timeout")]
    pub timeout_secs: Option<f64>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    #[arg(long)]
    pub sample_size: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run report JSON.
    #[arg(long)]
    pub from: PathBuf,
    /// Directory for CSV series.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    pub fn resolve(self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => PartialConfig::load(path)?,
            None => PartialConfig::default(),
        };
        let flags = PartialConfig {
            lang: self.lang,
            lexicon: self.lexicon,
            lexicon_tgt: self.lexicon_tgt,
            corpus: self.corpus,
            corpus_tgt: self.corpus_tgt,
            stoplist: self.stoplist,
            backend: self.backend,
            method: self.method,
            metrics: self.metrics,
            threshold: self.threshold,
            top_k: self.top_k,
            folds: self.folds,
            seed: self.seed,
            out: self.out,
            jobs: self.jobs,
            max_tokens: self.max_tokens,
            timeout_secs: self.timeout_secs,
            max_retries: self.max_retries,
            max_in_flight: self.max_in_flight,
            sample_size: self.sample_size,
            k_max: self.k_max,
        };
        RunConfig::resolve(file.overlay(flags))
    }
}

/// Run a parsed command; returns what to print on standard output.
pub fn run(cli: Cli) -> Result<String> {
    let (report, csv): (RunReport, Option<String>) = match cli.command {
        Command::Extract(a) => (pipeline::cmd_extract(&a.resolve()?)?, None),
        Command::Coverage(a) => (pipeline::cmd_coverage(&a.resolve()?)?, None),
        Command::Pairs(a) => (pipeline::cmd_pairs(&a.resolve()?)?, None),
        Command::Eval(a) => (pipeline::cmd_eval(&a.resolve()?)?, None),
        Command::SweepK(a) => {
            let cfg = a.resolve()?;
            let report = pipeline::cmd_sweep_k(&cfg)?;
            let csv = cfg
                .out
                .is_none()
                .then(|| report::topk_csv(report.topk.as_deref().unwrap_or_default()));
            (report, csv)
        }
        Command::Report(a) => (pipeline::cmd_report(&a.from, a.out.as_deref())?, None),
    };
    Ok(csv.unwrap_or_else(|| report.summary()))
}
