//! Bias metrics and run diagnostics.
//!
//! * MBE compares every male sentence with every female sentence, weighting
//!   each comparison by the cosine similarity of their embeddings.
//! * SBM compares only the two sides of each counterfactual pair.
//! * DBM compares the fill-mask probabilities of the predicted male and
//!   female words directly.
//!
//! All three report the fraction of comparisons won by the male side; a
//! comparison is won only on a strict `>`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::GenderedPartition;
use crate::error::Error;
use crate::lexicon::Gender;
use crate::pairgen::{GenerationStats, Origin, SentencePair};
use crate::scoring::{compute_aula, cosine_similarity, ScorerBackend};
use crate::sum::NeumaierSum;
use crate::text::SentenceRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mbe,
    Sbm,
    Dbm,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Mbe => "MBE",
            Metric::Sbm => "SBM",
            Metric::Dbm => "DBM",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "mbe" => Ok(Metric::Mbe),
            "sbm" => Ok(Metric::Sbm),
            "dbm" => Ok(Metric::Dbm),
            other => Err(format!("unknown metric `{other}` (expected mbe, sbm or dbm)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasScore {
    pub metric: Metric,
    /// Fraction in [0, 1]; mean over folds when `per_fold` is present.
    pub value: f64,
    /// Comparisons behind `value` (summed over folds).
    pub n_comparisons: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_fold: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stddev: Option<f64>,
}

impl BiasScore {
    fn single(metric: Metric, value: f64, n_comparisons: usize) -> Self {
        Self {
            metric,
            value,
            n_comparisons,
            per_fold: None,
            stddev: None,
        }
    }

    /// Combine per-fold scores of one metric into a mean with population
    /// standard deviation.
    pub fn from_folds(scores: &[BiasScore]) -> Result<Self, Error> {
        let first = scores.first().ok_or_else(|| Error::invalid("no fold scores"))?;
        if scores.iter().any(|s| s.metric != first.metric) {
            return Err(Error::invalid("fold scores mix metrics"));
        }
        let values: Vec<f64> = scores.iter().map(|s| s.value).collect();
        let (mean, stddev) = fold_stats(&values)?;
        Ok(Self {
            metric: first.metric,
            value: mean,
            n_comparisons: scores.iter().map(|s| s.n_comparisons).sum(),
            per_fold: (values.len() >= 2).then_some(values),
            stddev,
        })
    }

    pub fn percent(&self) -> f64 {
        self.value * 100.0
    }
}

/// Fraction of `(male, female)` comparisons where male is strictly greater.
pub fn male_preference(pairs: &[(f64, f64)]) -> Result<f64, Error> {
    if pairs.is_empty() {
        return Err(Error::undefined("no comparisons"));
    }
    let wins = pairs.iter().filter(|(m, f)| m > f).count();
    Ok(wins as f64 / pairs.len() as f64)
}

/// AULA per distinct sentence text, computed once.
fn aula_cache<'a, B, I>(backend: &B, sentences: I) -> Result<BTreeMap<&'a str, f64>, Error>
where
    B: ScorerBackend + ?Sized,
    I: IntoIterator<Item = &'a SentenceRecord>,
{
    let mut cache = BTreeMap::new();
    for s in sentences {
        if !cache.contains_key(s.text.as_str()) {
            cache.insert(s.text.as_str(), compute_aula(backend, s)?.aula);
        }
    }
    Ok(cache)
}

/// Strict bias metric over matched pairs: share of pairs whose male side
/// has the higher AULA. Ties count for neither side.
pub fn compute_sbm<B: ScorerBackend + ?Sized>(pairs: &[SentencePair], backend: &B) -> Result<BiasScore, Error> {
    if pairs.is_empty() {
        return Err(Error::undefined("SBM needs at least one sentence pair"));
    }
    let cache = aula_cache(backend, pairs.iter().flat_map(|p| [&p.male, &p.female]))?;
    let comparisons: Vec<(f64, f64)> = pairs
        .iter()
        .map(|p| (cache[p.male.text.as_str()], cache[p.female.text.as_str()]))
        .collect();
    Ok(BiasScore::single(Metric::Sbm, male_preference(&comparisons)?, comparisons.len()))
}

/// Similarity-weighted male preference over the full male x female product.
pub fn compute_mbe<B: ScorerBackend + ?Sized>(
    male: &[SentenceRecord],
    female: &[SentenceRecord],
    backend: &B,
) -> Result<BiasScore, Error> {
    if male.is_empty() || female.is_empty() {
        return Err(Error::undefined(format!(
            "MBE needs both sentence sets: {} male, {} female",
            male.len(),
            female.len()
        )));
    }
    let score = |s: &SentenceRecord| -> Result<(f64, Vec<f64>), Error> {
        let aula = compute_aula(backend, s)?.aula;
        let emb = backend.embed(&s.text).map_err(|e| Error::backend(s.id, e))?;
        Ok((aula, emb))
    };
    let males = male.iter().map(score).collect::<Result<Vec<_>, _>>()?;
    let females = female.iter().map(score).collect::<Result<Vec<_>, _>>()?;

    let mut cells = Vec::with_capacity(males.len() * females.len());
    for (m_aula, m_emb) in &males {
        for (f_aula, f_emb) in &females {
            cells.push((cosine_similarity(m_emb, f_emb)?, m_aula > f_aula));
        }
    }
    let n = cells.len();
    Ok(BiasScore::single(Metric::Mbe, weighted_male_preference(cells)?, n))
}

/// Sum of weights of male wins over the sum of all weights.
pub fn weighted_male_preference(cells: impl IntoIterator<Item = (f64, bool)>) -> Result<f64, Error> {
    let mut numerator = NeumaierSum::new();
    let mut denominator = NeumaierSum::new();
    for (gamma, male_wins) in cells {
        denominator.add(gamma);
        if male_wins {
            numerator.add(gamma);
        }
    }
    let denominator = denominator.total();
    if denominator == 0.0 {
        return Err(Error::undefined("MBE: similarity weights sum to zero"));
    }
    Ok(numerator.total() / denominator)
}

/// Direct comparison of predicted-word probabilities. Pairs where both
/// probabilities are absent or below `threshold` are skipped; an absent
/// probability counts as zero.
pub fn compute_dbm(pairs: &[SentencePair], threshold: f64) -> Result<BiasScore, Error> {
    let comparisons: Vec<(f64, f64)> = pairs
        .iter()
        .filter_map(|p| {
            let confident = |x: Option<f64>| x.is_some_and(|v| v >= threshold);
            (confident(p.male_prob) || confident(p.female_prob))
                .then(|| (p.male_prob.unwrap_or(0.0), p.female_prob.unwrap_or(0.0)))
        })
        .collect();
    if comparisons.is_empty() {
        return Err(Error::undefined("DBM: no pair has a prediction above the threshold"));
    }
    Ok(BiasScore::single(Metric::Dbm, male_preference(&comparisons)?, comparisons.len()))
}

/// Mean and population standard deviation (absent for a single value).
pub fn fold_stats(scores: &[f64]) -> Result<(f64, Option<f64>), Error> {
    if scores.is_empty() {
        return Err(Error::invalid("fold statistics of an empty list"));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().copied().collect::<NeumaierSum>().total() / n;
    if scores.len() == 1 {
        return Ok((mean, None));
    }
    let var = scores
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .collect::<NeumaierSum>()
        .total()
        / n;
    Ok((mean, Some(libm::sqrt(var))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub male_count: usize,
    pub female_count: usize,
    pub male_pct: f64,
    pub female_pct: f64,
    /// male / female; `None` when there are no female sentences.
    pub ratio: Option<f64>,
}

impl DistributionReport {
    pub fn from_counts(male_count: usize, female_count: usize) -> Result<Self, Error> {
        let total = male_count + female_count;
        if total == 0 {
            return Err(Error::undefined("gender distribution of an empty corpus"));
        }
        Ok(Self {
            male_count,
            female_count,
            male_pct: male_count as f64 * 100.0 / total as f64,
            female_pct: female_count as f64 * 100.0 / total as f64,
            ratio: (female_count > 0).then(|| male_count as f64 / female_count as f64),
        })
    }

    /// "62.83 / 37.17 (1.69:1)"
    pub fn summary(&self) -> String {
        let ratio = match self.ratio {
            Some(r) => format!("{r:.2}:1"),
            None => String::from("inf"),
        };
        format!("{:.2} / {:.2} ({ratio})", self.male_pct, self.female_pct)
    }
}

pub fn gender_distribution(partition: &GenderedPartition) -> Result<DistributionReport, Error> {
    DistributionReport::from_counts(partition.male_only.len(), partition.female_only.len())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordTypeCounts {
    pub male: usize,
    pub female: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    /// Word types taken from the lexicon (lexicon pairs, and the lexicon
    /// side of one-gender model pairs).
    pub lexicon_types: WordTypeCounts,
    pub model_both_types: WordTypeCounts,
    /// Model-predicted side of one-gender pairs.
    pub model_one_types: WordTypeCounts,
    /// Union of all model-predicted word types.
    pub model_types: WordTypeCounts,
    pub discarded_for_balance: usize,
    pub discarded_pct: f64,
    /// (both, one, none) in percent, for model-based runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msg_proportions: Option<(f64, f64, f64)>,
}

pub fn diagnostics(stats: &GenerationStats, pairs: &[SentencePair]) -> DiagnosticsReport {
    #[derive(Default)]
    struct Types {
        male: BTreeSet<String>,
        female: BTreeSet<String>,
    }
    impl Types {
        fn add(&mut self, gender: Gender, word: &str) {
            let w = word.to_lowercase();
            match gender {
                Gender::Male => self.male.insert(w),
                Gender::Female => self.female.insert(w),
            };
        }
        fn counts(&self) -> WordTypeCounts {
            WordTypeCounts {
                male: self.male.len(),
                female: self.female.len(),
            }
        }
    }

    let (mut lexicon, mut both, mut one, mut model) =
        (Types::default(), Types::default(), Types::default(), Types::default());
    for p in pairs {
        let words = [(Gender::Male, &p.male_word), (Gender::Female, &p.female_word)];
        match p.origin {
            Origin::Lexicon => words.iter().for_each(|(g, w)| lexicon.add(*g, w)),
            Origin::ModelBoth => {
                for (g, w) in words {
                    both.add(g, w);
                    model.add(g, w);
                }
            }
            Origin::ModelOnePlusLexicon => {
                let predicted = p.predicted_gender();
                for (g, w) in words {
                    if Some(g) == predicted {
                        one.add(g, w);
                        model.add(g, w);
                    } else {
                        lexicon.add(g, w);
                    }
                }
            }
        }
    }
    DiagnosticsReport {
        lexicon_types: lexicon.counts(),
        model_both_types: both.counts(),
        model_one_types: one.counts(),
        model_types: model.counts(),
        discarded_for_balance: stats.discarded_for_balance,
        discarded_pct: stats.discarded_pct,
        msg_proportions: stats.msg.and_then(|c| c.proportions()),
    }
}
