//! Run reports: one JSON document per run, plus plot-ready CSV series.
//!
//! Reports carry no timestamps or host details, so identical inputs give
//! byte-identical files.

use std::fmt::Write as _;

use genbias_core::corpus::{CoverageReport, GenderedPartition};
use genbias_core::metrics::{BiasScore, DiagnosticsReport, DistributionReport};
use genbias_core::pairgen::{GenerationStats, TopKPoint};
use genbias_core::BackendInfo;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const SBM_PAIRING: &str = "matched pairs: each male sentence is compared only with its own counterfactual";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    /// Non-empty lines read.
    pub sentences: usize,
    pub dropped_stoplist: usize,
    pub dropped_over_length: usize,
    pub male_only: usize,
    pub female_only: usize,
    pub multi: usize,
    pub neutral: usize,
}

impl CorpusSummary {
    pub fn fill_partition(&mut self, p: &GenderedPartition) {
        self.male_only = p.male_only.len();
        self.female_only = p.female_only.len();
        self.multi = p.multi.len();
        self.neutral = p.neutral.len();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub index: usize,
    pub seed: u64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: ToolInfo,
    pub command: String,
    pub config: RunConfig,
    pub prng: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<BackendInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sbm_pairing: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<CorpusSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<CoverageReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<GenerationStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub folds: Vec<FoldSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scores: Vec<BiasScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topk: Option<Vec<TopKPoint>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RunReport {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            tool: ToolInfo::default(),
            command: command.to_string(),
            config: config.clone(),
            prng: genbias_core::rng::PRNG_NAME.to_string(),
            backend: None,
            sbm_pairing: None,
            corpus: None,
            distribution: None,
            coverage: None,
            generation: None,
            diagnostics: None,
            folds: Vec::new(),
            scores: Vec::new(),
            topk: None,
            notes: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    /// Human-readable summary for standard output.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} ({})", self.command, self.config.lexicon.display());
        if let Some(b) = &self.backend {
            let _ = writeln!(out, "backend: {}", b.model_id);
        }
        if let Some(c) = &self.corpus {
            let _ = writeln!(
                out,
                "sentences: {} (male {}, female {}, multi {}, neutral {})",
                c.sentences, c.male_only, c.female_only, c.multi, c.neutral
            );
        }
        if let Some(d) = &self.distribution {
            let _ = writeln!(out, "male / female: {}", d.summary());
        }
        if let Some(c) = &self.coverage {
            let _ = writeln!(
                out,
                "coverage [{}]: {:.1}% ({} of {} translations)",
                c.language,
                c.coverage_percent(),
                c.translated_gendered,
                c.translated
            );
        }
        if let Some(g) = &self.generation {
            let _ = writeln!(
                out,
                "pairs: {} retained, {} discarded for balance ({:.2}%)",
                g.retained, g.discarded_for_balance, g.discarded_pct
            );
            if let Some((both, one, none)) = g.msg.and_then(|m| m.proportions()) {
                let _ = writeln!(out, "predictions: both {both:.2}%, one {one:.2}%, none {none:.2}%");
            }
        }
        for s in &self.scores {
            match s.stddev {
                Some(sd) => {
                    let _ = writeln!(out, "{}: {:.2} (±{:.2})", s.metric, s.percent(), sd * 100.0);
                }
                None => {
                    let _ = writeln!(out, "{}: {:.2}", s.metric, s.percent());
                }
            }
        }
        if let Some(points) = &self.topk {
            for p in points {
                let _ = writeln!(out, "top-{}: {:.4}", p.k, p.proportion);
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }
}

pub fn topk_csv(points: &[TopKPoint]) -> String {
    let mut out = String::from("k,proportion\n");
    for p in points {
        let _ = writeln!(out, "{},{}", p.k, p.proportion);
    }
    out
}

/// Word-type counts by origin and gender.
pub fn word_types_csv(d: &DiagnosticsReport) -> String {
    let mut out = String::from("origin,male,female\n");
    for (name, c) in [
        ("lexicon", d.lexicon_types),
        ("model_both", d.model_both_types),
        ("model_one", d.model_one_types),
        ("model", d.model_types),
    ] {
        let _ = writeln!(out, "{name},{},{}", c.male, c.female);
    }
    out
}
