//! Gender bias evaluation for masked language models.
//!
//! This crate holds the allocation-only algorithmic core: gender lexicons and
//! casing-preserving lookup, sentence tokenization and gendered partitioning,
//! the attention-weighted sentence likelihood (AULA), lexicon- and
//! model-based counterfactual pair generation with balancing, and the three
//! bias metrics (MBE, SBM, DBM). All model access goes through
//! [`ScorerBackend`]; IO, HTTP and the command line live in the `genbias`
//! crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod casing;
mod error;
mod sum;

pub mod corpus;
pub mod lexicon;
pub mod metrics;
pub mod pairgen;
pub mod rng;
pub mod scoring;
pub mod text;

pub use self::casing::{apply_casing, CasePattern};
pub use self::error::{BackendError, Error, LexiconError};
pub use self::lexicon::{
    AgreementRule, AgreementScope, Gender, GenderLexicon, GenderMatch, GenderPair, MatchMode,
    ValidationReport,
};
pub use self::scoring::{
    compute_aula, cosine_similarity, BackendInfo, MaskPrediction, ScoredSentence, ScorerBackend,
    TableBackend, TokenScore,
};
pub use self::sum::NeumaierSum;
pub use self::text::{SentenceRecord, Token};

pub type Result<T, E = Error> = core::result::Result<T, E>;
