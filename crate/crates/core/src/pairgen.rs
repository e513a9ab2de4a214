//! Counterfactual sentence pairs.
//!
//! Lexicon-based generation swaps the single gender word of a sentence for
//! its lexicon counterpart. Model-based generation masks that word and asks
//! the backend for its most probable male and female lexicon words, falling
//! back to the lexicon when only one gender is predicted with enough
//! confidence. Both paths rewrite dependent gendered components through the
//! lexicon's agreement rules, and both have a balancing step that evens out
//! the male and female sides.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::casing::{apply_casing, CasePattern};
use crate::corpus::GenderedPartition;
use crate::error::Error;
use crate::lexicon::{Gender, GenderLexicon};
use crate::rng;
use crate::scoring::{check_predictions, MaskPrediction, ScorerBackend};
use crate::text::SentenceRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Lexicon,
    ModelBoth,
    ModelOnePlusLexicon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePair {
    /// Id of the corpus sentence the pair was generated from.
    pub id: u64,
    pub male: SentenceRecord,
    pub female: SentenceRecord,
    pub pivot: usize,
    pub origin: Origin,
    /// Gender of the gender word in the original corpus sentence.
    pub source_gender: Gender,
    pub male_word: String,
    pub female_word: String,
    pub male_prob: Option<f64>,
    pub female_prob: Option<f64>,
}

impl SentencePair {
    pub fn side(&self, gender: Gender) -> &SentenceRecord {
        match gender {
            Gender::Male => &self.male,
            Gender::Female => &self.female,
        }
    }

    /// For one-gender model pairs, the gender the model predicted.
    pub fn predicted_gender(&self) -> Option<Gender> {
        match (self.origin, self.male_prob, self.female_prob) {
            (Origin::ModelOnePlusLexicon, Some(_), None) => Some(Gender::Male),
            (Origin::ModelOnePlusLexicon, None, Some(_)) => Some(Gender::Female),
            _ => None,
        }
    }

    /// The same pair with the male and female roles exchanged.
    pub fn swapped(&self) -> SentencePair {
        SentencePair {
            male: self.female.clone(),
            female: self.male.clone(),
            source_gender: self.source_gender.opposite(),
            male_word: self.female_word.clone(),
            female_word: self.male_word.clone(),
            male_prob: self.female_prob,
            female_prob: self.male_prob,
            ..self.clone()
        }
    }
}

/// Flat serialized form of a pair, one per line in pair datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub id: u64,
    pub male_text: String,
    pub female_text: String,
    pub pivot: usize,
    pub origin: Origin,
    pub source_gender: Gender,
    pub male_word: String,
    pub female_word: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub male_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub female_prob: Option<f64>,
}

impl From<&SentencePair> for PairRecord {
    fn from(p: &SentencePair) -> Self {
        PairRecord {
            id: p.id,
            male_text: p.male.text.clone(),
            female_text: p.female.text.clone(),
            pivot: p.pivot,
            origin: p.origin,
            source_gender: p.source_gender,
            male_word: p.male_word.clone(),
            female_word: p.female_word.clone(),
            male_prob: p.male_prob,
            female_prob: p.female_prob,
        }
    }
}

impl PairRecord {
    /// Rebuild a full pair by re-annotating both texts with `lexicon`.
    pub fn into_pair(self, lexicon: &GenderLexicon) -> SentencePair {
        let lang = lexicon.language();
        SentencePair {
            id: self.id,
            male: SentenceRecord::annotate(self.id, lang, &self.male_text, lexicon),
            female: SentenceRecord::annotate(self.id, lang, &self.female_text, lexicon),
            pivot: self.pivot,
            origin: self.origin,
            source_gender: self.source_gender,
            male_word: self.male_word,
            female_word: self.female_word,
            male_prob: self.male_prob,
            female_prob: self.female_prob,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsgConfig {
    pub threshold: f64,
    pub top_k: usize,
    pub seed: u64,
}

impl Default for MsgConfig {
    fn default() -> Self {
        Self {
            threshold: 0.01,
            top_k: 10,
            seed: 0,
        }
    }
}

impl MsgConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid(format!("threshold {} must lie in (0, 1)", self.threshold)));
        }
        if self.top_k < 1 {
            return Err(Error::invalid("top_k must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lsg,
    Msg,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Lsg => "lsg",
            Method::Msg => "msg",
        }
    }
}

impl core::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "lsg" => Ok(Method::Lsg),
            "msg" => Ok(Method::Msg),
            other => Err(format!("unknown method `{other}` (expected lsg or msg)")),
        }
    }
}

/// Model-based generation outcome per extracted sentence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MsgCategories {
    pub both: usize,
    pub one_gender: usize,
    /// One-gender sentences where only a male word was predicted.
    pub male_only: usize,
    pub female_only: usize,
    pub none: usize,
}

impl MsgCategories {
    pub fn total(&self) -> usize {
        self.both + self.one_gender + self.none
    }

    /// Percentages of (both, one, none) over all extracted sentences.
    pub fn proportions(&self) -> Option<(f64, f64, f64)> {
        let total = self.total();
        (total > 0).then(|| {
            let pct = |n: usize| n as f64 * 100.0 / total as f64;
            (pct(self.both), pct(self.one_gender), pct(self.none))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub method: Method,
    /// Single-gender sentences that generation started from.
    pub extracted: usize,
    pub extracted_male: usize,
    pub extracted_female: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msg: Option<MsgCategories>,
    /// Sentences dropped to even out genders (plus, for model-based
    /// generation, sentences with no usable prediction).
    pub discarded_for_balance: usize,
    /// `discarded_for_balance` over `extracted`, in percent.
    pub discarded_pct: f64,
    /// Pairs kept (per fold, after balancing).
    pub retained: usize,
    pub unique_male_words: usize,
    pub unique_female_words: usize,
}

impl GenerationStats {
    fn new(method: Method, partition: &GenderedPartition) -> Self {
        Self {
            method,
            extracted: partition.male_only.len() + partition.female_only.len(),
            extracted_male: partition.male_only.len(),
            extracted_female: partition.female_only.len(),
            msg: None,
            discarded_for_balance: 0,
            discarded_pct: 0.0,
            retained: 0,
            unique_male_words: 0,
            unique_female_words: 0,
        }
    }

    fn set_discarded(&mut self, discarded: usize) {
        self.discarded_for_balance = discarded;
        self.discarded_pct = if self.extracted == 0 {
            0.0
        } else {
            discarded as f64 * 100.0 / self.extracted as f64
        };
    }

    fn set_word_types(&mut self, pairs: &[SentencePair]) {
        let (m, f) = word_types(pairs);
        self.unique_male_words = m.len();
        self.unique_female_words = f.len();
    }
}

/// Distinct (case-folded) male and female words across `pairs`.
pub fn word_types(pairs: &[SentencePair]) -> (BTreeSet<String>, BTreeSet<String>) {
    let male = pairs.iter().map(|p| p.male_word.to_lowercase()).collect();
    let female = pairs.iter().map(|p| p.female_word.to_lowercase()).collect();
    (male, female)
}

/// Replace the word at `pivot` with `new_word` and rewrite every agreement
/// dependent of the opposite gender within each rule's window so that it
/// agrees with `target`. Also returns the rewritten dependent positions.
pub fn apply_agreement(
    sentence: &SentenceRecord,
    pivot: usize,
    new_word: &str,
    target: Gender,
    lexicon: &GenderLexicon,
) -> (SentenceRecord, Vec<usize>) {
    let mut out = sentence.clone();
    out.replace_token(pivot, new_word);
    let mut rewritten = Vec::new();
    for pos in 0..out.tokens.len() {
        if pos == pivot {
            continue;
        }
        let distance = pos.abs_diff(pivot);
        let folded = out.tokens[pos].text.to_lowercase();
        let rule = lexicon
            .agreement_rules()
            .iter()
            .find(|r| distance <= r.window && r.dependent(target.opposite()).to_lowercase() == folded);
        if let Some(rule) = rule {
            let pattern = CasePattern::of(&out.tokens[pos].text);
            let replacement = apply_casing(rule.dependent(target), pattern);
            out.replace_token(pos, &replacement);
            rewritten.push(pos);
        }
    }
    out.matches = lexicon.find_gender_words(&out);
    (out, rewritten)
}

fn single_match(record: &SentenceRecord) -> Result<(usize, &str, Gender), Error> {
    match record.matches.as_slice() {
        [m] => Ok((m.position, m.word.as_str(), m.gender)),
        other => Err(Error::invalid(format!(
            "sentence {} has {} gender words; expected exactly one",
            record.id,
            other.len()
        ))),
    }
}

fn lexicon_counterpart(lexicon: &GenderLexicon, record: &SentenceRecord, word: &str) -> Result<String, Error> {
    lexicon.counterpart(word).ok_or_else(|| {
        Error::invalid(format!(
            "sentence {}: gender word `{word}` has no lexicon counterpart",
            record.id
        ))
    })
}

/// Lexicon-based pair for one single-gender sentence.
pub fn lsg_pair(record: &SentenceRecord, lexicon: &GenderLexicon) -> Result<SentencePair, Error> {
    let (pivot, word, gender) = single_match(record)?;
    let counterpart = lexicon_counterpart(lexicon, record, word)?;
    let (swapped, _) = apply_agreement(record, pivot, &counterpart, gender.opposite(), lexicon);
    let (male, female) = match gender {
        Gender::Male => (record.clone(), swapped),
        Gender::Female => (swapped, record.clone()),
    };
    Ok(SentencePair {
        id: record.id,
        male_word: male.tokens[pivot].text.clone(),
        female_word: female.tokens[pivot].text.clone(),
        male,
        female,
        pivot,
        origin: Origin::Lexicon,
        source_gender: gender,
        male_prob: None,
        female_prob: None,
    })
}

pub fn generate_lsg(
    partition: &GenderedPartition,
    lexicon: &GenderLexicon,
) -> Result<(Vec<SentencePair>, GenerationStats), Error> {
    let pairs = partition
        .single_gender_sorted()
        .into_iter()
        .map(|r| lsg_pair(r, lexicon))
        .collect::<Result<Vec<_>, _>>()?;
    let mut stats = GenerationStats::new(Method::Lsg, partition);
    stats.retained = pairs.len();
    stats.set_word_types(&pairs);
    Ok((pairs, stats))
}

/// One balanced evaluation dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub index: usize,
    pub seed: u64,
    /// Sorted by sentence id.
    pub pairs: Vec<SentencePair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsgBalance {
    pub folds: Vec<Fold>,
    pub retained: usize,
    pub discarded: usize,
    pub discarded_pct: f64,
}

impl LsgBalance {
    pub fn apply_to(&self, stats: &mut GenerationStats) {
        stats.set_discarded(self.discarded);
        stats.retained = self.retained;
        if let Some(first) = self.folds.first() {
            stats.set_word_types(&first.pairs);
        }
    }
}

/// Build `folds` balanced datasets: the smaller source-gender set is kept
/// whole in every fold and the larger set is randomly truncated to its size,
/// with a different draw per fold.
pub fn balance_lsg(pairs: &[SentencePair], folds: usize, seed: u64) -> Result<LsgBalance, Error> {
    if folds < 1 {
        return Err(Error::invalid("at least one fold is required"));
    }
    let mut sorted: Vec<&SentencePair> = pairs.iter().collect();
    sorted.sort_by_key(|p| p.id);
    let (male, female): (Vec<&SentencePair>, Vec<&SentencePair>) =
        sorted.into_iter().partition(|p| p.source_gender == Gender::Male);
    if male.is_empty() || female.is_empty() {
        return Err(Error::undefined(format!(
            "cannot balance: {} male-source and {} female-source pairs",
            male.len(),
            female.len()
        )));
    }
    let (smaller, larger) = if male.len() <= female.len() {
        (male, female)
    } else {
        (female, male)
    };
    let keep = smaller.len();
    let folds = (0..folds)
        .map(|index| {
            let fold_seed = rng::fold_seed(seed, index);
            let mut chosen: Vec<SentencePair> = smaller
                .iter()
                .chain(rng::sample_keep(larger.clone(), keep, fold_seed).iter())
                .map(|p| (*p).clone())
                .collect();
            chosen.sort_by_key(|p| p.id);
            Fold {
                index,
                seed: fold_seed,
                pairs: chosen,
            }
        })
        .collect();
    let discarded = larger.len() - keep;
    let total = larger.len() + keep;
    Ok(LsgBalance {
        folds,
        retained: 2 * keep,
        discarded,
        discarded_pct: discarded as f64 * 100.0 / total as f64,
    })
}

fn best_candidate<'a>(
    preds: &'a [MaskPrediction],
    gender: Gender,
    lexicon: &GenderLexicon,
    threshold: f64,
) -> Option<&'a MaskPrediction> {
    // predictions arrive sorted; the first hit is the most probable, rank breaks ties
    preds
        .iter()
        .find(|p| p.prob >= threshold && lexicon.gender_of(&p.token) == Some(gender))
}

/// Model-based pair for one single-gender sentence, or `None` when neither
/// gender has a confident lexicon prediction.
pub fn msg_pair<B: ScorerBackend + ?Sized>(
    record: &SentenceRecord,
    lexicon: &GenderLexicon,
    backend: &B,
    config: &MsgConfig,
) -> Result<Option<SentencePair>, Error> {
    let (pivot, word, source_gender) = single_match(record)?;
    let preds = backend
        .fill_mask(&record.text, pivot, config.top_k)
        .and_then(|p| check_predictions(&record.text, &p, Some(config.top_k)).map(|_| p))
        .map_err(|e| Error::backend(record.id, e))?;
    let pattern = CasePattern::of(word);
    let male = best_candidate(&preds, Gender::Male, lexicon, config.threshold);
    let female = best_candidate(&preds, Gender::Female, lexicon, config.threshold);

    let side = |gender: Gender, w: &str| apply_agreement(record, pivot, w, gender, lexicon).0;
    let fallback = |missing: Gender| -> Result<String, Error> {
        // lexicon side comes from the original corpus word
        if missing == source_gender {
            Ok(String::from(word))
        } else {
            lexicon_counterpart(lexicon, record, word)
        }
    };

    let (male_word, female_word, male_prob, female_prob, origin) = match (male, female) {
        (Some(m), Some(f)) => (
            apply_casing(&m.token, pattern),
            apply_casing(&f.token, pattern),
            Some(m.prob),
            Some(f.prob),
            Origin::ModelBoth,
        ),
        (Some(m), None) => (
            apply_casing(&m.token, pattern),
            fallback(Gender::Female)?,
            Some(m.prob),
            None,
            Origin::ModelOnePlusLexicon,
        ),
        (None, Some(f)) => (
            fallback(Gender::Male)?,
            apply_casing(&f.token, pattern),
            None,
            Some(f.prob),
            Origin::ModelOnePlusLexicon,
        ),
        (None, None) => return Ok(None),
    };
    Ok(Some(SentencePair {
        id: record.id,
        male: side(Gender::Male, &male_word),
        female: side(Gender::Female, &female_word),
        pivot,
        origin,
        source_gender,
        male_word,
        female_word,
        male_prob,
        female_prob,
    }))
}

pub fn generate_msg<B: ScorerBackend + ?Sized>(
    partition: &GenderedPartition,
    lexicon: &GenderLexicon,
    backend: &B,
    config: &MsgConfig,
) -> Result<(Vec<SentencePair>, GenerationStats), Error> {
    config.validate()?;
    let mut cats = MsgCategories::default();
    let mut pairs = Vec::new();
    for record in partition.single_gender_sorted() {
        match msg_pair(record, lexicon, backend, config)? {
            Some(pair) => {
                match (pair.origin, pair.predicted_gender()) {
                    (Origin::ModelBoth, _) => cats.both += 1,
                    (_, Some(Gender::Male)) => cats.male_only += 1,
                    _ => cats.female_only += 1,
                }
                pairs.push(pair);
            }
            None => cats.none += 1,
        }
    }
    cats.one_gender = cats.male_only + cats.female_only;
    let mut stats = GenerationStats::new(Method::Msg, partition);
    stats.msg = Some(cats);
    stats.retained = pairs.len();
    stats.set_discarded(cats.none);
    stats.set_word_types(&pairs);
    Ok((pairs, stats))
}

/// Keep every both-gender pair, truncate the larger one-gender group to the
/// size of the smaller one, and count unpredicted sentences as discarded.
pub fn balance_msg(
    pairs: &[SentencePair],
    stats: &GenerationStats,
    seed: u64,
) -> (Vec<SentencePair>, GenerationStats) {
    let mut sorted: Vec<&SentencePair> = pairs.iter().collect();
    sorted.sort_by_key(|p| p.id);
    let both: Vec<&SentencePair> = sorted.iter().copied().filter(|p| p.origin != Origin::ModelOnePlusLexicon).collect();
    let one_male: Vec<&SentencePair> = sorted
        .iter()
        .copied()
        .filter(|p| p.predicted_gender() == Some(Gender::Male))
        .collect();
    let one_female: Vec<&SentencePair> = sorted
        .iter()
        .copied()
        .filter(|p| p.predicted_gender() == Some(Gender::Female))
        .collect();
    let keep = one_male.len().min(one_female.len());
    let truncated = one_male.len() + one_female.len() - 2 * keep;
    let (male_seed, female_seed) = (rng::splitmix64(seed), rng::splitmix64(seed ^ 1));

    let mut retained: Vec<SentencePair> = both
        .into_iter()
        .chain(rng::sample_keep(one_male, keep, male_seed))
        .chain(rng::sample_keep(one_female, keep, female_seed))
        .cloned()
        .collect();
    retained.sort_by_key(|p| p.id);

    let mut out = stats.clone();
    let none = stats.msg.map(|c| c.none).unwrap_or(0);
    out.set_discarded(none + truncated);
    out.retained = retained.len();
    out.set_word_types(&retained);
    (retained, out)
}

/// Share of confident gendered predictions captured by the top-k list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopKPoint {
    pub k: usize,
    pub proportion: f64,
}

/// For k = 1..=k_max, the fraction of all above-threshold gendered
/// predictions (over every single-gender sentence) ranked within the top k.
pub fn analyze_topk_coverage<B: ScorerBackend + ?Sized>(
    partition: &GenderedPartition,
    lexicon: &GenderLexicon,
    backend: &B,
    threshold: f64,
    k_max: usize,
) -> Result<Vec<TopKPoint>, Error> {
    if k_max < 1 {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    let sentences = partition.single_gender_sorted();
    if sentences.is_empty() {
        return Err(Error::undefined("top-k coverage: no single-gender sentences"));
    }
    let mut ranks = Vec::new();
    for record in sentences {
        let (pivot, _, _) = single_match(record)?;
        let preds = backend
            .fill_mask(&record.text, pivot, k_max)
            .and_then(|p| check_predictions(&record.text, &p, Some(k_max)).map(|_| p))
            .map_err(|e| Error::backend(record.id, e))?;
        ranks.extend(
            preds
                .iter()
                .enumerate()
                .filter(|(_, p)| p.prob >= threshold && lexicon.gender_of(&p.token).is_some())
                .map(|(i, _)| i + 1),
        );
    }
    if ranks.is_empty() {
        return Err(Error::undefined("top-k coverage: no gendered prediction reaches the threshold"));
    }
    let total = ranks.len() as f64;
    Ok((1..=k_max)
        .map(|k| TopKPoint {
            k,
            proportion: ranks.iter().filter(|&&r| r <= k).count() as f64 / total,
        })
        .collect())
}
