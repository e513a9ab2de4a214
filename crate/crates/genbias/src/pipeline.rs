//! The subcommands, as library functions returning a [`RunReport`].

use std::fs;
use std::path::Path;

use genbias_core::corpus::{self, GenderedPartition};
use genbias_core::metrics::{self, BiasScore, Metric};
use genbias_core::pairgen::{self, Method, PairRecord, SentencePair};
use genbias_core::{rng, BackendInfo, Gender, GenderLexicon, ScorerBackend, SentenceRecord, TableBackend};

use crate::config::{BackendSpec, RunConfig};
use crate::error::{Error, Result};
use crate::fixture;
use crate::io;
use crate::prefetch::{memo_for, Prefetcher};
use crate::remote::RemoteBackend;
use crate::report::{self, CorpusSummary, FoldSummary, RunReport, SBM_PAIRING};

/// An opened backend. Remote answers are fetched in parallel into a memo
/// table first; all scoring then reads from a table.
pub enum Scorer {
    Table(TableBackend),
    Remote {
        remote: Box<RemoteBackend>,
        memo: TableBackend,
        prefetch: Prefetcher,
    },
}

impl Scorer {
    pub fn open(cfg: &RunConfig) -> Result<Self> {
        match cfg.backend()? {
            BackendSpec::Table(path) => Ok(Scorer::Table(fixture::load_table(path)?)),
            BackendSpec::Http(url) => {
                let remote = RemoteBackend::connect(url, cfg.remote_options())?;
                let memo = memo_for(remote.info());
                Ok(Scorer::Remote {
                    remote: Box::new(remote),
                    memo,
                    prefetch: Prefetcher::new(cfg.jobs)?,
                })
            }
        }
    }

    pub fn table(&self) -> &TableBackend {
        match self {
            Scorer::Table(t) => t,
            Scorer::Remote { memo, .. } => memo,
        }
    }

    pub fn info(&self) -> BackendInfo {
        self.table().info()
    }

    pub fn warm_token_scores<'a>(&mut self, sentences: impl IntoIterator<Item = &'a SentenceRecord>) -> Result<()> {
        match self {
            Scorer::Table(_) => Ok(()),
            Scorer::Remote { remote, memo, prefetch } => prefetch.token_scores(remote.as_ref(), sentences, memo),
        }
    }

    pub fn warm_embeddings<'a>(&mut self, sentences: impl IntoIterator<Item = &'a SentenceRecord>) -> Result<()> {
        match self {
            Scorer::Table(_) => Ok(()),
            Scorer::Remote { remote, memo, prefetch } => prefetch.embeddings(remote.as_ref(), sentences, memo),
        }
    }

    pub fn warm_fill_mask<'a>(
        &mut self,
        sentences: impl IntoIterator<Item = &'a SentenceRecord>,
        k: usize,
    ) -> Result<()> {
        match self {
            Scorer::Table(_) => Ok(()),
            Scorer::Remote { remote, memo, prefetch } => prefetch.fill_mask(remote.as_ref(), sentences, k, memo),
        }
    }
}

struct Loaded {
    lexicon: GenderLexicon,
    partition: GenderedPartition,
    summary: CorpusSummary,
}

fn load_lexicon(path: &Path, lang: Option<&str>) -> Result<GenderLexicon> {
    let parsed = io::load_lexicon(path)?;
    for w in &parsed.warnings {
        log::warn!("{}: {w}", path.display());
    }
    let lexicon = parsed.lexicon;
    if let Some(lang) = lang {
        if lexicon.language() != "und" && lexicon.language() != lang {
            return Err(Error::config(format!(
                "{} is a `{}` lexicon but --lang is `{lang}`",
                path.display(),
                lexicon.language()
            )));
        }
    }
    Ok(lexicon)
}

fn load_corpus(cfg: &RunConfig, max_tokens: usize) -> Result<Loaded> {
    let lexicon = load_lexicon(&cfg.lexicon, cfg.lang.as_deref())?;
    let mut records = io::load_monolingual(&cfg.corpus, &lexicon)?;
    let mut summary = CorpusSummary {
        sentences: records.len(),
        ..Default::default()
    };
    if records.is_empty() {
        log::warn!("{}: corpus has no sentences", cfg.corpus.display());
    }
    if let Some(path) = &cfg.stoplist {
        let stop = io::load_stoplist(path)?;
        summary.dropped_stoplist = corpus::apply_stoplist(&mut records, &stop);
    }
    summary.dropped_over_length = corpus::drop_over_length(&mut records, max_tokens);
    if summary.dropped_over_length > 0 {
        log::warn!(
            "dropped {} sentences longer than {max_tokens} tokens",
            summary.dropped_over_length
        );
    }
    let partition = corpus::partition_gendered(records, &lexicon);
    summary.fill_partition(&partition);
    Ok(Loaded {
        lexicon,
        partition,
        summary,
    })
}

fn effective_max_tokens(cfg: &RunConfig, info: &BackendInfo) -> usize {
    match info.max_tokens {
        0 => cfg.max_tokens,
        n => n.min(cfg.max_tokens),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_report(path: &Path, report: &RunReport) -> Result<()> {
    write_text(path, &report.to_json())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Split the corpus into male-only, female-only, multi-gender and neutral
/// sentences. With `--out <dir>`, writes one NDJSON file per class plus
/// `report.json`.
pub fn cmd_extract(cfg: &RunConfig) -> Result<RunReport> {
    let loaded = load_corpus(cfg, cfg.max_tokens)?;
    let mut report = RunReport::new("extract", cfg);
    match metrics::gender_distribution(&loaded.partition) {
        Ok(d) => report.distribution = Some(d),
        Err(e) => report.notes.push(format!("no distribution: {e}")),
    }
    report.corpus = Some(loaded.summary);

    if let Some(dir) = &cfg.out {
        create_dir(dir)?;
        let records = io::partition_records(&loaded.partition);
        for (class, name) in [
            (corpus::PartitionClass::Male, "male.ndjson"),
            (corpus::PartitionClass::Female, "female.ndjson"),
            (corpus::PartitionClass::Multi, "multi.ndjson"),
            (corpus::PartitionClass::Neutral, "neutral.ndjson"),
        ] {
            io::write_ndjson(&dir.join(name), records.iter().filter(|r| r.gender == class))?;
        }
        write_report(&dir.join("report.json"), &report)?;
    }
    Ok(report)
}

/// Share of gendered source sentences whose translation contains a
/// target-language gender word.
pub fn cmd_coverage(cfg: &RunConfig) -> Result<RunReport> {
    let tgt_lex_path = cfg
        .lexicon_tgt
        .as_ref()
        .ok_or_else(|| Error::config("coverage needs --lexicon-tgt <path>"))?;
    let tgt_corpus = cfg
        .corpus_tgt
        .as_ref()
        .ok_or_else(|| Error::config("coverage needs --corpus-tgt <path>"))?;
    let src_lex = load_lexicon(&cfg.lexicon, None)?;
    let tgt_lex = load_lexicon(tgt_lex_path, cfg.lang.as_deref())?;
    let pairs = io::load_parallel(&cfg.corpus, tgt_corpus, &src_lex, &tgt_lex)?;
    let coverage = corpus::validate_coverage(&pairs, cfg.sample_size, cfg.seed)
        .map_err(|e| match e {
            genbias_core::Error::InvalidInput(m) => Error::config(m),
            other => other.into(),
        })?;
    let mut report = RunReport::new("coverage", cfg);
    report.coverage = Some(coverage);
    if let Some(out) = &cfg.out {
        write_report(out, &report)?;
    }
    Ok(report)
}

/// Pairs plus generation statistics for one balanced dataset per fold.
struct Generated {
    all_pairs: Vec<SentencePair>,
    folds: Vec<(usize, u64, Vec<SentencePair>)>,
    stats: pairgen::GenerationStats,
}

/// With `strict` off, a corpus that cannot be balanced still yields its
/// pairs, with no folds.
fn generate(cfg: &RunConfig, loaded: &Loaded, scorer: Option<&mut Scorer>, strict: bool) -> Result<Generated> {
    match cfg.method {
        Method::Lsg => {
            let (pairs, mut stats) = pairgen::generate_lsg(&loaded.partition, &loaded.lexicon)?;
            let folds = match pairgen::balance_lsg(&pairs, cfg.folds, cfg.seed) {
                Ok(balance) => {
                    balance.apply_to(&mut stats);
                    balance.folds.into_iter().map(|f| (f.index, f.seed, f.pairs)).collect()
                }
                Err(genbias_core::Error::Undefined(msg)) if !strict => {
                    log::warn!("{msg}; writing unbalanced pairs only");
                    Vec::new()
                }
                Err(e) => return Err(e.into()),
            };
            Ok(Generated {
                all_pairs: pairs,
                folds,
                stats,
            })
        }
        Method::Msg => {
            let scorer = scorer.ok_or_else(|| Error::config("--method msg needs --backend"))?;
            let msg = cfg.msg_config();
            scorer.warm_fill_mask(loaded.partition.single_gender_sorted(), msg.top_k)?;
            let (pairs, stats) = pairgen::generate_msg(&loaded.partition, &loaded.lexicon, scorer.table(), &msg)?;
            let mut folds = Vec::with_capacity(cfg.folds);
            let mut fold_stats = None;
            for index in 0..cfg.folds {
                let seed = rng::fold_seed(cfg.seed, index);
                let (kept, s) = pairgen::balance_msg(&pairs, &stats, seed);
                fold_stats.get_or_insert(s);
                folds.push((index, seed, kept));
            }
            Ok(Generated {
                all_pairs: pairs,
                folds,
                stats: fold_stats.unwrap_or(stats),
            })
        }
    }
}

fn fold_summaries(g: &Generated) -> Vec<FoldSummary> {
    g.folds
        .iter()
        .map(|(index, seed, pairs)| FoldSummary {
            index: *index,
            seed: *seed,
            pairs: pairs.len(),
        })
        .collect()
}

/// Generate counterfactual pairs. With `--out <dir>`, writes `pairs.ndjson`
/// (every lexicon pair, or the balanced model-based set) and `report.json`.
pub fn cmd_pairs(cfg: &RunConfig) -> Result<RunReport> {
    let (loaded, mut scorer) = match cfg.method {
        Method::Lsg => (load_corpus(cfg, cfg.max_tokens)?, None),
        Method::Msg => {
            let scorer = Scorer::open(cfg)?;
            let max = effective_max_tokens(cfg, &scorer.info());
            (load_corpus(cfg, max)?, Some(scorer))
        }
    };
    let generated = generate(cfg, &loaded, scorer.as_mut(), false)?;
    let mut report = RunReport::new("pairs", cfg);
    report.backend = scorer.as_ref().map(Scorer::info);
    report.corpus = Some(loaded.summary);
    report.folds = fold_summaries(&generated);
    if generated.folds.is_empty() {
        report.notes.push("pairs could not be balanced: one gender has no sentences".to_string());
    }
    let written: &[SentencePair] = match cfg.method {
        Method::Lsg => &generated.all_pairs,
        Method::Msg => &generated.folds[0].2,
    };
    report.diagnostics = Some(metrics::diagnostics(&generated.stats, written));
    report.generation = Some(generated.stats.clone());

    if let Some(dir) = &cfg.out {
        create_dir(dir)?;
        io::write_ndjson(&dir.join("pairs.ndjson"), written.iter().map(PairRecord::from))?;
        write_report(&dir.join("report.json"), &report)?;
    }
    Ok(report)
}

/// Balanced male and female sentence sets for one fold: the smaller set
/// whole, the larger one sampled down to the same size.
fn mbe_sets(partition: &GenderedPartition, fold_seed: u64) -> (Vec<&SentenceRecord>, Vec<&SentenceRecord>) {
    let male: Vec<&SentenceRecord> = partition.single_gender(Gender::Male).iter().collect();
    let female: Vec<&SentenceRecord> = partition.single_gender(Gender::Female).iter().collect();
    let keep = male.len().min(female.len());
    if male.len() > keep {
        (rng::sample_keep(male, keep, fold_seed), female)
    } else {
        let female = rng::sample_keep(female, keep, fold_seed);
        (male, female)
    }
}

/// Full evaluation: generation, balancing into folds and every requested
/// metric, written as one report.
pub fn cmd_eval(cfg: &RunConfig) -> Result<RunReport> {
    let mut scorer = Scorer::open(cfg)?;
    let info = scorer.info();
    if cfg.metrics.contains(&Metric::Mbe) && info.embedding_dim == 0 {
        return Err(Error::config(format!(
            "mbe needs sentence embeddings but backend `{}` provides none",
            info.model_id
        )));
    }
    let loaded = load_corpus(cfg, effective_max_tokens(cfg, &info))?;
    let generated = generate(cfg, &loaded, Some(&mut scorer), true)?;

    let mut report = RunReport::new("eval", cfg);
    report.backend = Some(info);
    report.distribution = metrics::gender_distribution(&loaded.partition).ok();
    report.corpus = Some(loaded.summary.clone());
    report.folds = fold_summaries(&generated);
    report.diagnostics = Some(metrics::diagnostics(&generated.stats, &generated.folds[0].2));
    report.generation = Some(generated.stats.clone());

    for metric in &cfg.metrics {
        let mut per_fold = Vec::with_capacity(generated.folds.len());
        match metric {
            Metric::Sbm => {
                report.sbm_pairing = Some(SBM_PAIRING.to_string());
                scorer.warm_token_scores(
                    generated
                        .folds
                        .iter()
                        .flat_map(|(_, _, pairs)| pairs.iter().flat_map(|p| [&p.male, &p.female])),
                )?;
                for (_, _, pairs) in &generated.folds {
                    per_fold.push(metrics::compute_sbm(pairs, scorer.table())?);
                }
            }
            Metric::Dbm => {
                for (_, _, pairs) in &generated.folds {
                    per_fold.push(metrics::compute_dbm(pairs, cfg.threshold)?);
                }
            }
            Metric::Mbe => {
                let single = loaded.partition.single_gender_sorted();
                scorer.warm_token_scores(single.iter().copied())?;
                scorer.warm_embeddings(single.iter().copied())?;
                for (_, seed, _) in &generated.folds {
                    let (male, female) = mbe_sets(&loaded.partition, *seed);
                    let male: Vec<SentenceRecord> = male.into_iter().cloned().collect();
                    let female: Vec<SentenceRecord> = female.into_iter().cloned().collect();
                    per_fold.push(metrics::compute_mbe(&male, &female, scorer.table())?);
                }
            }
        }
        report.scores.push(BiasScore::from_folds(&per_fold)?);
    }

    if let Some(out) = &cfg.out {
        write_report(out, &report)?;
    }
    Ok(report)
}

/// Cumulative share of gendered predictions ranked within the top k, for
/// k = 1..=k_max. With `--out`, writes the curve as CSV.
pub fn cmd_sweep_k(cfg: &RunConfig) -> Result<RunReport> {
    let mut scorer = Scorer::open(cfg)?;
    let info = scorer.info();
    let loaded = load_corpus(cfg, effective_max_tokens(cfg, &info))?;
    scorer.warm_fill_mask(loaded.partition.single_gender_sorted(), cfg.k_max)?;
    let points = pairgen::analyze_topk_coverage(
        &loaded.partition,
        &loaded.lexicon,
        scorer.table(),
        cfg.threshold,
        cfg.k_max,
    )?;
    let mut report = RunReport::new("sweep-k", cfg);
    report.backend = Some(info);
    report.corpus = Some(loaded.summary);
    if let Some(out) = &cfg.out {
        write_text(out, &report::topk_csv(&points))?;
    }
    report.topk = Some(points);
    Ok(report)
}

/// Re-read a run report and write its CSV series into `out_dir`.
pub fn cmd_report(from: &Path, out_dir: Option<&Path>) -> Result<RunReport> {
    let report: RunReport = io::read_json(from)?;
    if let Some(dir) = out_dir {
        create_dir(dir)?;
        if let Some(points) = &report.topk {
            write_text(&dir.join("topk.csv"), &report::topk_csv(points))?;
        }
        if let Some(d) = &report.diagnostics {
            write_text(&dir.join("word_types.csv"), &report::word_types_csv(d))?;
        }
    }
    Ok(report)
}
