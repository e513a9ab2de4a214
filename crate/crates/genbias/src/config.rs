//! Run configuration: defaults, a TOML file (or the `config` block of an
//! earlier run report), then command-line flags, later sources winning.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use genbias_core::corpus::DEFAULT_MAX_TOKENS;
use genbias_core::metrics::Metric;
use genbias_core::pairgen::{Method, MsgConfig};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::remote::{RemoteOptions, DEFAULT_MAX_IN_FLIGHT};

pub const DEFAULT_SAMPLE_SIZE: usize = 11_000;
pub const DEFAULT_K_MAX: usize = 15;
pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Table(PathBuf),
    Http(String),
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if let Some(path) = s.strip_prefix("table:") {
            if path.is_empty() {
                return Err("`table:` needs a fixture path".into());
            }
            return Ok(BackendSpec::Table(PathBuf::from(path)));
        }
        if let Some(rest) = s.strip_prefix("http:") {
            let url = if rest.starts_with("http://") || rest.starts_with("https://") {
                rest.to_string()
            } else if let Some(host) = rest.strip_prefix("//") {
                format!("http://{host}")
            } else {
                format!("http://{rest}")
            };
            if url.len() <= "http://".len() {
                return Err("`http:` needs a service address".into());
            }
            return Ok(BackendSpec::Http(url));
        }
        Err(format!("backend `{s}` must look like table:<path> or http:<url>"))
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Table(p) => write!(f, "table:{}", p.display()),
            BackendSpec::Http(url) => write!(f, "http:{url}"),
        }
    }
}

impl Serialize for BackendSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BackendSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Every setting optional; used for the config file and for flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub lang: Option<String>,
    pub lexicon: Option<PathBuf>,
    pub lexicon_tgt: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub corpus_tgt: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    pub backend: Option<BackendSpec>,
    pub method: Option<Method>,
    pub metrics: Option<Vec<Metric>>,
    pub threshold: Option<f64>,
    pub top_k: Option<usize>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub max_tokens: Option<usize>,
    pub timeout_secs: Option<f64>,
    pub max_retries: Option<u32>,
    pub max_in_flight: Option<usize>,
    pub sample_size: Option<usize>,
    pub k_max: Option<usize>,
}

impl PartialConfig {
    /// Fields set in `other` replace ours.
    pub fn overlay(mut self, other: PartialConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            lang, lexicon, lexicon_tgt, corpus, corpus_tgt, stoplist, backend, method, metrics, threshold, top_k,
            folds, seed, out, jobs, max_tokens, timeout_secs, max_retries, max_in_flight, sample_size, k_max
        );
        self
    }

    /// Read a TOML config file, or the `config` block of a JSON run report.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            #[derive(Deserialize)]
            struct ReportConfig {
                config: PartialConfig,
            }
            let report: ReportConfig = serde_json::from_str(&text).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })?;
            return Ok(report.config);
        }
        toml::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings, embedded verbatim in every run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    pub lexicon: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lexicon_tgt: Option<PathBuf>,
    pub corpus: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus_tgt: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stoplist: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<BackendSpec>,
    pub method: Method,
    pub metrics: Vec<Metric>,
    pub threshold: f64,
    pub top_k: usize,
    pub folds: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// 0 means one worker per logical core.
    pub jobs: usize,
    pub max_tokens: usize,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub max_in_flight: usize,
    pub sample_size: usize,
    pub k_max: usize,
}

impl RunConfig {
    pub fn resolve(p: PartialConfig) -> Result<Self> {
        let lexicon = p
            .lexicon
            .ok_or_else(|| Error::config("no lexicon given (use --lexicon <path>)"))?;
        let corpus = p
            .corpus
            .ok_or_else(|| Error::config("no corpus given (use --corpus <path>)"))?;
        let mut metrics = p.metrics.unwrap_or_else(|| vec![Metric::Sbm]);
        metrics.sort();
        metrics.dedup();
        let cfg = RunConfig {
            lang: p.lang,
            lexicon,
            lexicon_tgt: p.lexicon_tgt,
            corpus,
            corpus_tgt: p.corpus_tgt,
            stoplist: p.stoplist,
            backend: p.backend,
            method: p.method.unwrap_or(Method::Lsg),
            metrics,
            threshold: p.threshold.unwrap_or(MsgConfig::default().threshold),
            top_k: p.top_k.unwrap_or(MsgConfig::default().top_k),
            folds: p.folds.unwrap_or(DEFAULT_FOLDS),
            seed: p.seed.unwrap_or(0),
            out: p.out,
            jobs: p.jobs.unwrap_or(0),
            max_tokens: p.max_tokens.unwrap_or(DEFAULT_MAX_TOKENS),
            timeout_secs: p.timeout_secs.unwrap_or(30.0),
            max_retries: p.max_retries.unwrap_or(3),
            max_in_flight: p.max_in_flight.unwrap_or(DEFAULT_MAX_IN_FLIGHT),
            sample_size: p.sample_size.unwrap_or(DEFAULT_SAMPLE_SIZE),
            k_max: p.k_max.unwrap_or(DEFAULT_K_MAX),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 1 {
            return Err(Error::config("--folds must be at least 1"));
        }
        if self.metrics.is_empty() {
            return Err(Error::config("--metrics must name at least one of mbe, sbm, dbm"));
        }
        if self.metrics.contains(&Metric::Dbm) && self.method != Method::Msg {
            return Err(Error::config(
                "dbm compares predicted-word probabilities and needs --method msg",
            ));
        }
        self.msg_config()
            .validate()
            .map_err(|e| Error::config(e.to_string()))?;
        if self.k_max < 1 {
            return Err(Error::config("--k-max must be at least 1"));
        }
        if self.max_tokens < 1 {
            return Err(Error::config("--max-tokens must be at least 1"));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(Error::config("--timeout must be a positive number of seconds"));
        }
        Ok(())
    }

    pub fn msg_config(&self) -> MsgConfig {
        MsgConfig {
            threshold: self.threshold,
            top_k: self.top_k,
            seed: self.seed,
        }
    }

    pub fn remote_options(&self) -> RemoteOptions {
        RemoteOptions {
            timeout: Duration::from_secs_f64(self.timeout_secs),
            max_retries: self.max_retries,
            max_in_flight: self.max_in_flight,
            ..RemoteOptions::default()
        }
    }

    pub fn backend(&self) -> Result<&BackendSpec> {
        self.backend
            .as_ref()
            .ok_or_else(|| Error::config("no backend given (use --backend table:<path> or http:<url>)"))
    }
}
