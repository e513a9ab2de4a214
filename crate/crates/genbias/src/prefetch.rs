//! Parallel warm-up of a [`TableBackend`] memo from a slower backend.
//!
//! Metric and generation code in the core crate runs sequentially against
//! the memo, so results never depend on response arrival order.

use std::collections::BTreeSet;

use genbias_core::{BackendInfo, Error as CoreError, ScorerBackend, SentenceRecord, TableBackend};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub struct Prefetcher {
    pool: rayon::ThreadPool,
}

impl Prefetcher {
    /// `jobs == 0` uses one thread per logical core.
    pub fn new(jobs: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Fetch token scores for every distinct text not already in `memo`.
    pub fn token_scores<'a, B>(
        &self,
        backend: &B,
        sentences: impl IntoIterator<Item = &'a SentenceRecord>,
        memo: &mut TableBackend,
    ) -> Result<()>
    where
        B: ScorerBackend + Sync + ?Sized,
    {
        let todo = distinct(sentences, |s| !memo.has_token_scores(&s.text));
        let fetched = self.pool.install(|| {
            todo.par_iter()
                .map(|s| {
                    backend
                        .token_scores(&s.text)
                        .map(|v| (s, v))
                        .map_err(|e| backend_error(s, e))
                })
                .collect::<std::result::Result<Vec<_>, _>>()
        })?;
        for (s, scores) in fetched {
            memo.insert_token_scores(&s.text, scores)
                .map_err(|e| reject(s, "token_scores", e))?;
        }
        Ok(())
    }

    pub fn embeddings<'a, B>(
        &self,
        backend: &B,
        sentences: impl IntoIterator<Item = &'a SentenceRecord>,
        memo: &mut TableBackend,
    ) -> Result<()>
    where
        B: ScorerBackend + Sync + ?Sized,
    {
        let todo = distinct(sentences, |s| memo.embed(&s.text).is_err());
        let fetched = self.pool.install(|| {
            todo.par_iter()
                .map(|s| backend.embed(&s.text).map(|v| (s, v)).map_err(|e| backend_error(s, e)))
                .collect::<std::result::Result<Vec<_>, _>>()
        })?;
        for (s, vector) in fetched {
            memo.insert_embedding(&s.text, vector)
                .map_err(|e| reject(s, "embed", e))?;
        }
        Ok(())
    }

    /// Fetch `k` predictions at the single gender word of each sentence.
    /// Sentences without exactly one gender word are skipped.
    pub fn fill_mask<'a, B>(
        &self,
        backend: &B,
        sentences: impl IntoIterator<Item = &'a SentenceRecord>,
        k: usize,
        memo: &mut TableBackend,
    ) -> Result<()>
    where
        B: ScorerBackend + Sync + ?Sized,
    {
        let todo: Vec<(&SentenceRecord, usize)> = distinct(sentences, |s| s.matches.len() == 1)
            .into_iter()
            .map(|s| (s, s.matches[0].position))
            .filter(|(s, pos)| memo.fill_mask(&s.text, *pos, k).is_err())
            .collect();
        let fetched = self.pool.install(|| {
            todo.par_iter()
                .map(|&(s, pos)| {
                    backend
                        .fill_mask(&s.text, pos, k)
                        .map(|v| (s, pos, v))
                        .map_err(|e| backend_error(s, e))
                })
                .collect::<std::result::Result<Vec<_>, _>>()
        })?;
        for (s, pos, preds) in fetched {
            memo.insert_fill_mask(&s.text, pos, preds)
                .map_err(|e| reject(s, "fill_mask", e))?;
        }
        Ok(())
    }
}

/// An empty memo that reports `info` as its own.
pub fn memo_for(info: BackendInfo) -> TableBackend {
    let mut memo = TableBackend::new();
    memo.set_info(info);
    memo
}

fn distinct<'a>(
    sentences: impl IntoIterator<Item = &'a SentenceRecord>,
    mut wanted: impl FnMut(&SentenceRecord) -> bool,
) -> Vec<&'a SentenceRecord> {
    let mut seen = BTreeSet::new();
    sentences
        .into_iter()
        .filter(|s| wanted(s) && seen.insert(s.text.as_str()))
        .collect()
}

fn backend_error(s: &SentenceRecord, source: genbias_core::BackendError) -> Error {
    Error::Core(CoreError::Backend {
        sentence_id: s.id,
        source,
    })
}

fn reject(s: &SentenceRecord, kind: &'static str, e: CoreError) -> Error {
    backend_error(
        s,
        genbias_core::BackendError::Contract {
            kind,
            text: s.text.clone(),
            message: e.to_string(),
        },
    )
}
