use alloc::string::String;

use thiserror::Error;

/// Problems found while building a lexicon from raw entries.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexiconError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("word `{word}` appears in more than one {side} entry")]
    DuplicateWord { word: String, side: &'static str },
    #[error("word `{word}` is listed as both male and female")]
    CrossGender { word: String },
    #[error("counterpart lookup for `{word}` is not symmetric")]
    Asymmetric { word: String },
    #[error("entry `{word}` is empty or identical to its counterpart")]
    DegenerateEntry { word: String },
    #[error("entry `{word}` spans more than one token; only single-word entries are supported")]
    MultiWord { word: String },
    #[error("agreement rule `{dependent}`: {message}")]
    BadAgreementRule { dependent: String, message: String },
}

/// Failures raised by a scorer backend.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    /// Table backends answer only what their fixture contains.
    #[error("no fixture entry for {kind} query on `{text}`")]
    UnknownQuery { kind: &'static str, text: String },
    #[error("connection to {endpoint} failed ({request}): {message}")]
    Connection {
        endpoint: String,
        request: String,
        message: String,
    },
    #[error("request {request} to {endpoint} timed out")]
    Timeout { endpoint: String, request: String },
    #[error("malformed response to {request}: {message}")]
    MalformedResponse { request: String, message: String },
    #[error("server rejected {request} with status {status}: {message}")]
    Server {
        request: String,
        status: u16,
        message: String,
    },
    /// The response parsed but breaks a scoring contract (probability out of
    /// range, mismatched lengths, wrong embedding dimension, ...).
    #[error("invalid {kind} response for `{text}`: {message}")]
    Contract {
        kind: &'static str,
        text: String,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("sentence {sentence_id}: {source}")]
    Backend {
        sentence_id: u64,
        #[source]
        source: BackendError,
    },
    /// A metric or ratio has no defined value for the given input.
    #[error("undefined: {0}")]
    Undefined(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn backend(sentence_id: u64, source: BackendError) -> Self {
        Error::Backend {
            sentence_id,
            source,
        }
    }

    pub(crate) fn undefined(msg: impl Into<String>) -> Self {
        Error::Undefined(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
