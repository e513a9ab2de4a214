//! Corpus partitioning and lexicon coverage validation.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::lexicon::{Gender, GenderLexicon};
use crate::rng;
use crate::text::SentenceRecord;

/// Default scorer token limit; longer sentences are dropped, never truncated.
pub const DEFAULT_MAX_TOKENS: usize = 512;

/// Annotate raw lines. `lines` yields `(line_number, text)`; blank lines are
/// skipped and ids stay equal to line numbers (0-based).
pub fn records_from_lines<'a>(
    lines: impl IntoIterator<Item = (usize, &'a str)>,
    language: &str,
    lexicon: &GenderLexicon,
) -> Vec<SentenceRecord> {
    lines
        .into_iter()
        .filter_map(|(n, line)| {
            let line = line.trim_end_matches('\r').trim();
            (!line.is_empty()).then(|| SentenceRecord::annotate(n as u64, language, line, lexicon))
        })
        .collect()
}

/// One line of a line-aligned parallel corpus. `target` is `None` when the
/// translation line is empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelPair {
    pub id: u64,
    pub source: SentenceRecord,
    pub target: Option<SentenceRecord>,
}

impl ParallelPair {
    pub fn has_translation(&self) -> bool {
        self.target.is_some()
    }
}

/// Align two corpora line by line. Lines whose source side is blank carry
/// no sentence and are skipped.
pub fn align_parallel(
    source_lines: &[&str],
    target_lines: &[&str],
    source_lexicon: &GenderLexicon,
    target_lexicon: &GenderLexicon,
) -> Result<Vec<ParallelPair>, Error> {
    if source_lines.len() != target_lines.len() {
        return Err(Error::invalid(format!(
            "parallel corpora are not line-aligned: {} source lines vs {} target lines",
            source_lines.len(),
            target_lines.len()
        )));
    }
    let src_lang = source_lexicon.language();
    let tgt_lang = target_lexicon.language();
    Ok(source_lines
        .iter()
        .zip(target_lines)
        .enumerate()
        .filter_map(|(n, (src, tgt))| {
            let src = src.trim_end_matches('\r').trim();
            if src.is_empty() {
                return None;
            }
            let tgt = tgt.trim_end_matches('\r').trim();
            let id = n as u64;
            Some(ParallelPair {
                id,
                source: SentenceRecord::annotate(id, src_lang, src, source_lexicon),
                target: (!tgt.is_empty())
                    .then(|| SentenceRecord::annotate(id, tgt_lang, tgt, target_lexicon)),
            })
        })
        .collect())
}

/// Sentences split by gender-word content. The four lists are disjoint and
/// together hold every input sentence; each list is sorted by id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderedPartition {
    pub male_only: Vec<SentenceRecord>,
    pub female_only: Vec<SentenceRecord>,
    /// Two or more lexicon hits, same gender or mixed.
    pub multi: Vec<SentenceRecord>,
    pub neutral: Vec<SentenceRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionClass {
    Male,
    Female,
    Multi,
    Neutral,
}

impl PartitionClass {
    pub fn of(record: &SentenceRecord) -> Self {
        match record.matches.as_slice() {
            [] => PartitionClass::Neutral,
            [only] => match only.gender {
                Gender::Male => PartitionClass::Male,
                Gender::Female => PartitionClass::Female,
            },
            _ => PartitionClass::Multi,
        }
    }
}

impl GenderedPartition {
    pub fn single_gender(&self, gender: Gender) -> &[SentenceRecord] {
        match gender {
            Gender::Male => &self.male_only,
            Gender::Female => &self.female_only,
        }
    }

    /// Single-gender sentences of both genders, ordered by id.
    pub fn single_gender_sorted(&self) -> Vec<&SentenceRecord> {
        let mut all: Vec<&SentenceRecord> =
            self.male_only.iter().chain(self.female_only.iter()).collect();
        all.sort_by_key(|r| r.id);
        all
    }

    pub fn len(&self) -> usize {
        self.male_only.len() + self.female_only.len() + self.multi.len() + self.neutral.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every sentence tagged with its class, ordered by id.
    pub fn classified(&self) -> Vec<(PartitionClass, &SentenceRecord)> {
        let mut all: Vec<(PartitionClass, &SentenceRecord)> = self
            .male_only
            .iter()
            .map(|r| (PartitionClass::Male, r))
            .chain(self.female_only.iter().map(|r| (PartitionClass::Female, r)))
            .chain(self.multi.iter().map(|r| (PartitionClass::Multi, r)))
            .chain(self.neutral.iter().map(|r| (PartitionClass::Neutral, r)))
            .collect();
        all.sort_by_key(|(_, r)| r.id);
        all
    }
}

/// Split sentences by how many lexicon hits they contain. Matches are
/// recomputed with `lexicon`, so records annotated elsewhere are accepted.
pub fn partition_gendered(records: Vec<SentenceRecord>, lexicon: &GenderLexicon) -> GenderedPartition {
    let mut out = GenderedPartition::default();
    let mut records = records;
    records.sort_by_key(|r| r.id);
    for mut record in records {
        record.matches = lexicon.find_gender_words(&record);
        match PartitionClass::of(&record) {
            PartitionClass::Male => out.male_only.push(record),
            PartitionClass::Female => out.female_only.push(record),
            PartitionClass::Multi => out.multi.push(record),
            PartitionClass::Neutral => out.neutral.push(record),
        }
    }
    out
}

/// Remove sentences listed in a user-supplied stoplist (for example, strongly
/// context-biased sentences flagged during review). Returns the number removed.
pub fn apply_stoplist(records: &mut Vec<SentenceRecord>, stoplist: &BTreeSet<u64>) -> usize {
    let before = records.len();
    records.retain(|r| !stoplist.contains(&r.id));
    before - records.len()
}

/// Drop sentences longer than `max_tokens`. Returns the number dropped.
pub fn drop_over_length(records: &mut Vec<SentenceRecord>, max_tokens: usize) -> usize {
    let before = records.len();
    records.retain(|r| r.tokens.len() <= max_tokens);
    before - records.len()
}

/// Lexicon coverage on a parallel sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub language: String,
    /// Sampled source sentences.
    pub sampled: usize,
    /// Sampled source sentences with at least one source gender word.
    pub english_gendered: usize,
    /// Of those, sentences with a non-empty translation.
    pub translated: usize,
    /// Of those, translations with at least one target gender word.
    pub translated_gendered: usize,
    pub coverage: f64,
    pub seed: u64,
    pub prng: String,
}

impl CoverageReport {
    pub fn from_counts(
        language: &str,
        sampled: usize,
        english_gendered: usize,
        translated: usize,
        translated_gendered: usize,
        seed: u64,
    ) -> Result<Self, Error> {
        if !(translated_gendered <= translated && translated <= english_gendered && english_gendered <= sampled)
        {
            return Err(Error::invalid(format!(
                "coverage counts break the chain {translated_gendered} <= {translated} <= {english_gendered} <= {sampled}"
            )));
        }
        if translated == 0 {
            return Err(Error::undefined("coverage: no gendered source sentence has a translation"));
        }
        Ok(Self {
            language: language.to_string(),
            sampled,
            english_gendered,
            translated,
            translated_gendered,
            coverage: translated_gendered as f64 / translated as f64,
            seed,
            prng: rng::PRNG_NAME.to_string(),
        })
    }

    pub fn coverage_percent(&self) -> f64 {
        self.coverage * 100.0
    }
}

/// Sample `sample_size` source sentences, keep the gendered ones, then
/// measure how many of their translations contain a target gender word.
/// Pairs are expected to be annotated with the matching lexicons.
pub fn validate_coverage(
    pairs: &[ParallelPair],
    sample_size: usize,
    seed: u64,
) -> Result<CoverageReport, Error> {
    if sample_size > pairs.len() {
        return Err(Error::invalid(format!(
            "sample size {sample_size} exceeds corpus size {}",
            pairs.len()
        )));
    }
    let mut ordered: Vec<&ParallelPair> = pairs.iter().collect();
    ordered.sort_by_key(|p| p.id);
    let sample = rng::sample_keep(ordered, sample_size, seed);
    let gendered: Vec<&&ParallelPair> = sample.iter().filter(|p| !p.source.matches.is_empty()).collect();
    let translated: Vec<&SentenceRecord> = gendered.iter().filter_map(|p| p.target.as_ref()).collect();
    let translated_gendered = translated.iter().filter(|t| !t.matches.is_empty()).count();
    let language = pairs
        .iter()
        .find_map(|p| p.target.as_ref().map(|t| t.language.clone()))
        .unwrap_or_default();
    CoverageReport::from_counts(
        &language,
        sample.len(),
        gendered.len(),
        translated.len(),
        translated_gendered,
        seed,
    )
}
