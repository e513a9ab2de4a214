//! Scorer backend contract, AULA, cosine similarity and the table backend.
//!
//! A backend answers three queries about a sentence: per-token
//! log-likelihoods with attention weights, top-k fill-mask predictions at
//! one token position, and a sentence embedding. Everything downstream is
//! computed from those answers, so a fixture-driven [`TableBackend`] can
//! stand in for a real model.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{BackendError, Error};
use crate::sum::NeumaierSum;
use crate::text::SentenceRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenScore {
    pub token: String,
    /// Natural-log likelihood of the token, never positive.
    pub log_prob: f64,
    /// Non-negative attention weight of the token.
    pub attention: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskPrediction {
    pub token: String,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendInfo {
    pub model_id: String,
    pub max_tokens: usize,
    pub embedding_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_source: Option<String>,
}

pub trait ScorerBackend {
    fn info(&self) -> BackendInfo;

    /// One score per word of `text`, in order.
    fn token_scores(&self, text: &str) -> Result<Vec<TokenScore>, BackendError>;

    /// Up to `k` predictions for the token at `mask_index`, most probable first.
    fn fill_mask(&self, text: &str, mask_index: usize, k: usize) -> Result<Vec<MaskPrediction>, BackendError>;

    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError>;
}

impl<T: ScorerBackend + ?Sized> ScorerBackend for &T {
    fn info(&self) -> BackendInfo {
        (**self).info()
    }
    fn token_scores(&self, text: &str) -> Result<Vec<TokenScore>, BackendError> {
        (**self).token_scores(text)
    }
    fn fill_mask(&self, text: &str, mask_index: usize, k: usize) -> Result<Vec<MaskPrediction>, BackendError> {
        (**self).fill_mask(text, mask_index, k)
    }
    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        (**self).embed(text)
    }
}

impl<T: ScorerBackend + ?Sized> ScorerBackend for alloc::boxed::Box<T> {
    fn info(&self) -> BackendInfo {
        (**self).info()
    }
    fn token_scores(&self, text: &str) -> Result<Vec<TokenScore>, BackendError> {
        (**self).token_scores(text)
    }
    fn fill_mask(&self, text: &str, mask_index: usize, k: usize) -> Result<Vec<MaskPrediction>, BackendError> {
        (**self).fill_mask(text, mask_index, k)
    }
    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        (**self).embed(text)
    }
}

/// Check token scores against the scoring contract.
pub fn check_token_scores(text: &str, scores: &[TokenScore]) -> Result<(), BackendError> {
    let bad = |message: String| BackendError::Contract {
        kind: "token_scores",
        text: text.to_string(),
        message,
    };
    if scores.is_empty() {
        return Err(bad("no tokens".into()));
    }
    for s in scores {
        if !s.log_prob.is_finite() || s.log_prob > 0.0 {
            return Err(bad(format!("log_prob {} of `{}` is not a finite value <= 0", s.log_prob, s.token)));
        }
        if !s.attention.is_finite() || s.attention < 0.0 {
            return Err(bad(format!("attention {} of `{}` is negative or not finite", s.attention, s.token)));
        }
    }
    Ok(())
}

/// Check fill-mask output: probabilities in [0, 1], descending, at most `k`.
pub fn check_predictions(text: &str, preds: &[MaskPrediction], k: Option<usize>) -> Result<(), BackendError> {
    let bad = |message: String| BackendError::Contract {
        kind: "fill_mask",
        text: text.to_string(),
        message,
    };
    if let Some(k) = k {
        if preds.len() > k {
            return Err(bad(format!("{} predictions returned for top_k {k}", preds.len())));
        }
    }
    for p in preds {
        if !(0.0..=1.0).contains(&p.prob) {
            return Err(bad(format!("probability {} of `{}` is outside [0, 1]", p.prob, p.token)));
        }
    }
    if preds.windows(2).any(|w| w[0].prob < w[1].prob) {
        return Err(bad("predictions are not sorted by descending probability".into()));
    }
    Ok(())
}

/// Attention-weighted mean log-likelihood: (1/|S|) * sum(attention * log_prob).
pub fn aula(scores: &[TokenScore]) -> f64 {
    let total: NeumaierSum = scores.iter().map(|s| s.attention * s.log_prob).collect();
    total.total() / scores.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSentence {
    pub sentence: SentenceRecord,
    pub token_scores: Vec<TokenScore>,
    pub aula: f64,
}

pub fn compute_aula<B: ScorerBackend + ?Sized>(backend: &B, sentence: &SentenceRecord) -> Result<ScoredSentence, Error> {
    let token_scores = backend
        .token_scores(&sentence.text)
        .and_then(|scores| check_token_scores(&sentence.text, &scores).map(|_| scores))
        .map_err(|e| Error::backend(sentence.id, e))?;
    Ok(ScoredSentence {
        sentence: sentence.clone(),
        aula: aula(&token_scores),
        token_scores,
    })
}

/// Cosine of the angle between two embeddings, clamped to [-1, 1].
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, Error> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "embedding dimensions differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let dot: NeumaierSum = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let na: NeumaierSum = a.iter().map(|x| x * x).collect();
    let nb: NeumaierSum = b.iter().map(|x| x * x).collect();
    let (na, nb) = (libm::sqrt(na.total()), libm::sqrt(nb.total()));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::undefined("cosine similarity of a zero vector"));
    }
    Ok((dot.total() / (na * nb)).clamp(-1.0, 1.0))
}

/// Token scores in the column layout used by fixtures and the wire protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenScoreColumns {
    pub tokens: Vec<String>,
    pub log_probs: Vec<f64>,
    pub attentions: Vec<f64>,
}

impl TokenScoreColumns {
    pub fn into_scores(self, text: &str, kind: &'static str) -> Result<Vec<TokenScore>, BackendError> {
        let n = self.tokens.len();
        if self.log_probs.len() != n || self.attentions.len() != n {
            return Err(BackendError::Contract {
                kind,
                text: text.to_string(),
                message: format!(
                    "column lengths differ: {} tokens, {} log_probs, {} attentions",
                    n,
                    self.log_probs.len(),
                    self.attentions.len()
                ),
            });
        }
        Ok(self
            .tokens
            .into_iter()
            .zip(self.log_probs)
            .zip(self.attentions)
            .map(|((token, log_prob), attention)| TokenScore {
                token,
                log_prob,
                attention,
            })
            .collect())
    }

    pub fn from_scores(scores: &[TokenScore]) -> Self {
        Self {
            tokens: scores.iter().map(|s| s.token.clone()).collect(),
            log_probs: scores.iter().map(|s| s.log_prob).collect(),
            attentions: scores.iter().map(|s| s.attention).collect(),
        }
    }
}

/// Serialized form of a [`TableBackend`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TableFixture {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info: Option<BackendInfo>,
    #[serde(default)]
    pub token_scores: BTreeMap<String, TokenScoreColumns>,
    /// text -> mask index -> predictions.
    #[serde(default)]
    pub fill_mask: BTreeMap<String, BTreeMap<usize, Vec<MaskPrediction>>>,
    #[serde(default)]
    pub embed: BTreeMap<String, Vec<f64>>,
}

/// Backend that answers exactly what its fixture holds and errors on
/// anything else.
#[derive(Debug, Clone, Default)]
pub struct TableBackend {
    info: Option<BackendInfo>,
    token_scores: BTreeMap<String, Vec<TokenScore>>,
    fill_mask: BTreeMap<(String, usize), Vec<MaskPrediction>>,
    embed: BTreeMap<String, Vec<f64>>,
}

impl TableBackend {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build from a fixture, validating every entry.
    pub fn from_fixture(fixture: TableFixture) -> Result<Self, Error> {
        let mut table = TableBackend {
            info: fixture.info,
            ..Default::default()
        };
        for (text, cols) in fixture.token_scores {
            let scores = cols
                .into_scores(&text, "token_scores")
                .map_err(|e| Error::invalid(e.to_string()))?;
            table.insert_token_scores(&text, scores)?;
        }
        for (text, by_index) in fixture.fill_mask {
            for (index, preds) in by_index {
                table.insert_fill_mask(&text, index, preds)?;
            }
        }
        for (text, vector) in fixture.embed {
            table.insert_embedding(&text, vector)?;
        }
        Ok(table)
    }

    pub fn to_fixture(&self) -> TableFixture {
        let mut fill_mask: BTreeMap<String, BTreeMap<usize, Vec<MaskPrediction>>> = BTreeMap::new();
        for ((text, index), preds) in &self.fill_mask {
            fill_mask.entry(text.clone()).or_default().insert(*index, preds.clone());
        }
        TableFixture {
            info: self.info.clone(),
            token_scores: self
                .token_scores
                .iter()
                .map(|(t, s)| (t.clone(), TokenScoreColumns::from_scores(s)))
                .collect(),
            fill_mask,
            embed: self.embed.clone(),
        }
    }

    pub fn set_info(&mut self, info: BackendInfo) {
        self.info = Some(info);
    }

    pub fn insert_token_scores(&mut self, text: &str, scores: Vec<TokenScore>) -> Result<(), Error> {
        check_token_scores(text, &scores).map_err(|e| Error::invalid(e.to_string()))?;
        self.token_scores.insert(text.to_string(), scores);
        Ok(())
    }

    pub fn insert_fill_mask(&mut self, text: &str, mask_index: usize, preds: Vec<MaskPrediction>) -> Result<(), Error> {
        check_predictions(text, &preds, None).map_err(|e| Error::invalid(e.to_string()))?;
        self.fill_mask.insert((text.to_string(), mask_index), preds);
        Ok(())
    }

    pub fn insert_embedding(&mut self, text: &str, vector: Vec<f64>) -> Result<(), Error> {
        if vector.is_empty() || vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("embedding for `{text}` is empty or not finite")));
        }
        if let Some(dim) = self.embedding_dim() {
            if dim != vector.len() {
                return Err(Error::invalid(format!(
                    "embedding for `{text}` has dimension {} but the table uses {dim}",
                    vector.len()
                )));
            }
        }
        self.embed.insert(text.to_string(), vector);
        Ok(())
    }

    fn embedding_dim(&self) -> Option<usize> {
        self.info
            .as_ref()
            .map(|i| i.embedding_dim)
            .filter(|&d| d > 0)
            .or_else(|| self.embed.values().next().map(Vec::len))
    }

    pub fn has_token_scores(&self, text: &str) -> bool {
        self.token_scores.contains_key(text)
    }
}

impl ScorerBackend for TableBackend {
    fn info(&self) -> BackendInfo {
        self.info.clone().unwrap_or_else(|| BackendInfo {
            model_id: "table".to_string(),
            max_tokens: crate::corpus::DEFAULT_MAX_TOKENS,
            embedding_dim: self.embedding_dim().unwrap_or(0),
            embedding_source: None,
        })
    }

    fn token_scores(&self, text: &str) -> Result<Vec<TokenScore>, BackendError> {
        self.token_scores
            .get(text)
            .cloned()
            .ok_or_else(|| BackendError::UnknownQuery {
                kind: "token_scores",
                text: text.to_string(),
            })
    }

    fn fill_mask(&self, text: &str, mask_index: usize, k: usize) -> Result<Vec<MaskPrediction>, BackendError> {
        self.fill_mask
            .get(&(text.to_string(), mask_index))
            .map(|preds| preds.iter().take(k).cloned().collect())
            .ok_or_else(|| BackendError::UnknownQuery {
                kind: "fill_mask",
                text: format!("{text} @ {mask_index}"),
            })
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        self.embed.get(text).cloned().ok_or_else(|| BackendError::UnknownQuery {
            kind: "embed",
            text: text.to_string(),
        })
    }
}
