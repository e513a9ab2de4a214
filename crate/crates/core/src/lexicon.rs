//! Multilingual gender lexicons.
//!
//! A lexicon is a list of male/female word pairs for one language plus
//! agreement rules for dependent gendered components (articles,
//! possessives, ...). Lookups are case-insensitive; substitutions replicate
//! the casing of the word they replace.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::casing::{apply_casing, CasePattern};
use crate::error::LexiconError;
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn opposite(self) -> Self {
        match self {
            Gender::Male => Gender::Female,
            Gender::Female => Gender::Male,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How lexicon words are located in running text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// Whole tokens after whitespace/punctuation splitting.
    #[default]
    Token,
    /// Contiguous character substrings, for unsegmented scripts.
    Substring,
}

impl FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "token" => Ok(MatchMode::Token),
            "substring" => Ok(MatchMode::Substring),
            other => Err(format!("unknown match mode `{other}` (expected token|substring)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderPair {
    pub male: String,
    pub female: String,
}

impl GenderPair {
    pub fn new(male: impl Into<String>, female: impl Into<String>) -> Self {
        Self {
            male: male.into(),
            female: female.into(),
        }
    }

    pub fn word(&self, gender: Gender) -> &str {
        match gender {
            Gender::Male => &self.male,
            Gender::Female => &self.female,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementScope {
    Article,
    Possessive,
    Demonstrative,
    AdjectiveForm,
    Other,
}

impl FromStr for AgreementScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "article" => AgreementScope::Article,
            "possessive" => AgreementScope::Possessive,
            "demonstrative" => AgreementScope::Demonstrative,
            "adjective_form" => AgreementScope::AdjectiveForm,
            "other" => AgreementScope::Other,
            other => return Err(format!("unknown agreement scope `{other}`")),
        })
    }
}

impl AgreementScope {
    pub fn as_str(self) -> &'static str {
        match self {
            AgreementScope::Article => "article",
            AgreementScope::Possessive => "possessive",
            AgreementScope::Demonstrative => "demonstrative",
            AgreementScope::AdjectiveForm => "adjective_form",
            AgreementScope::Other => "other",
        }
    }
}

/// A gendered component that must follow the gender of the pivot word when
/// it occurs within `window` tokens of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementRule {
    pub dependent_male: String,
    pub dependent_female: String,
    pub scope: AgreementScope,
    pub window: usize,
}

impl AgreementRule {
    pub fn dependent(&self, gender: Gender) -> &str {
        match gender {
            Gender::Male => &self.dependent_male,
            Gender::Female => &self.dependent_female,
        }
    }
}

/// One lexicon hit inside a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderMatch {
    /// Token index within the sentence.
    pub position: usize,
    /// Surface form as it appears in the sentence.
    pub word: String,
    pub gender: Gender,
}

#[derive(Debug, Clone, Copy)]
struct IndexEntry {
    gender: Gender,
    pair: usize,
}

/// A validated gender lexicon for one language. Immutable once built.
#[derive(Debug, Clone)]
pub struct GenderLexicon {
    language: String,
    match_mode: MatchMode,
    entries: Vec<GenderPair>,
    agreement_rules: Vec<AgreementRule>,
    index: BTreeMap<String, IndexEntry>,
    // distinct entry lengths in chars, longest first (substring scans)
    char_lengths: Vec<usize>,
}

fn fold(word: &str) -> String {
    word.trim().to_lowercase()
}

impl GenderLexicon {
    /// Build a lexicon, rejecting any entry set that breaks the lexicon
    /// invariants. The first violation found is returned.
    pub fn new(
        language: impl Into<String>,
        match_mode: MatchMode,
        entries: Vec<GenderPair>,
        agreement_rules: Vec<AgreementRule>,
    ) -> Result<Self, LexiconError> {
        let report = ValidationReport::check(match_mode, &entries, &agreement_rules);
        if let Some(err) = report.first_error() {
            return Err(err);
        }
        let entries: Vec<GenderPair> = entries
            .into_iter()
            .map(|p| GenderPair::new(p.male.trim(), p.female.trim()))
            .collect();
        let mut index = BTreeMap::new();
        let mut lengths = BTreeSet::new();
        for (i, pair) in entries.iter().enumerate() {
            for gender in [Gender::Male, Gender::Female] {
                let folded = fold(pair.word(gender));
                lengths.insert(folded.chars().count());
                index.insert(folded, IndexEntry { gender, pair: i });
            }
        }
        Ok(Self {
            language: language.into(),
            match_mode,
            entries,
            agreement_rules,
            index,
            char_lengths: lengths.into_iter().rev().collect(),
        })
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn match_mode(&self) -> MatchMode {
        self.match_mode
    }

    pub fn entries(&self) -> &[GenderPair] {
        &self.entries
    }

    pub fn agreement_rules(&self) -> &[AgreementRule] {
        &self.agreement_rules
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Gender of `word` if it is a lexicon word (case-insensitive).
    pub fn gender_of(&self, word: &str) -> Option<Gender> {
        self.index.get(&fold(word)).map(|e| e.gender)
    }

    /// Opposite-gender word for `word`, recased to follow `word`'s casing
    /// (lower, Title or UPPER; anything else keeps the lexicon's casing).
    pub fn counterpart(&self, word: &str) -> Option<String> {
        let entry = self.index.get(&fold(word))?;
        let other = self.entries[entry.pair].word(entry.gender.opposite());
        Some(apply_casing(other, CasePattern::of(word)))
    }

    /// All lexicon hits in `sentence`, in token order.
    pub fn find_gender_words(&self, sentence: &text::SentenceRecord) -> Vec<GenderMatch> {
        sentence
            .tokens
            .iter()
            .enumerate()
            .filter_map(|(position, tok)| {
                self.gender_of(&tok.text).map(|gender| GenderMatch {
                    position,
                    word: tok.text.clone(),
                    gender,
                })
            })
            .collect()
    }

    /// Leftmost-longest, non-overlapping substring hits as byte spans.
    pub fn scan_substrings(&self, text: &str) -> Vec<(usize, usize)> {
        let mut spans = Vec::new();
        if self.char_lengths.is_empty() {
            return spans;
        }
        let boundaries: Vec<usize> = text
            .char_indices()
            .map(|(i, _)| i)
            .chain(core::iter::once(text.len()))
            .collect();
        let n_chars = boundaries.len() - 1;
        let mut at = 0;
        while at < n_chars {
            let hit = self.char_lengths.iter().find_map(|&len| {
                let end = at + len;
                if end > n_chars {
                    return None;
                }
                let slice = &text[boundaries[at]..boundaries[end]];
                self.index.contains_key(&slice.to_lowercase()).then_some(end)
            });
            match hit {
                Some(end) => {
                    spans.push((boundaries[at], boundaries[end]));
                    at = end;
                }
                None => at += 1,
            }
        }
        spans
    }

    /// Validation report for this lexicon. Always passes for a built
    /// lexicon; exposed so callers can audit and print it.
    pub fn validate(&self) -> ValidationReport {
        ValidationReport::check(self.match_mode, &self.entries, &self.agreement_rules)
    }
}

/// Outcome of checking a raw entry list against the lexicon invariants.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pass: bool,
    /// `(word, side)` for words listed in more than one entry on one side.
    pub duplicates: Vec<(String, String)>,
    pub cross_gender: Vec<String>,
    pub asymmetric: Vec<String>,
    pub degenerate: Vec<String>,
    pub multi_word: Vec<String>,
    pub bad_rules: Vec<(String, String)>,
}

impl ValidationReport {
    pub fn check(mode: MatchMode, entries: &[GenderPair], rules: &[AgreementRule]) -> Self {
        let mut report = ValidationReport::default();

        for pair in entries {
            let (m, f) = (fold(&pair.male), fold(&pair.female));
            if m.is_empty() || f.is_empty() || m == f {
                report.degenerate.push(if m.is_empty() { f } else { m });
                continue;
            }
            for w in [&pair.male, &pair.female] {
                if !is_single_word(mode, w.trim()) {
                    report.multi_word.push(w.trim().to_string());
                }
            }
        }

        let mut seen: [BTreeMap<String, usize>; 2] = [BTreeMap::new(), BTreeMap::new()];
        for pair in entries {
            for (side, gender) in [Gender::Male, Gender::Female].into_iter().enumerate() {
                *seen[side].entry(fold(pair.word(gender))).or_default() += 1;
            }
        }
        for (side, name) in [(0, "male"), (1, "female")] {
            for (word, &count) in &seen[side] {
                if count > 1 && !word.is_empty() {
                    report.duplicates.push((word.clone(), name.to_string()));
                }
            }
        }
        for word in seen[0].keys() {
            if !word.is_empty() && seen[1].contains_key(word) {
                report.cross_gender.push(word.clone());
            }
        }

        // brute force: counterpart(counterpart(w)) == w with first-entry lookup
        let lookup = |w: &str| -> Option<String> {
            entries.iter().find_map(|p| {
                if fold(&p.male) == w {
                    Some(fold(&p.female))
                } else if fold(&p.female) == w {
                    Some(fold(&p.male))
                } else {
                    None
                }
            })
        };
        let mut asym = BTreeSet::new();
        for pair in entries {
            for w in [fold(&pair.male), fold(&pair.female)] {
                let back = lookup(&w).and_then(|c| lookup(&c));
                if back.as_deref() != Some(w.as_str()) {
                    asym.insert(w);
                }
            }
        }
        report.asymmetric = asym.into_iter().collect();

        for rule in rules {
            let (m, f) = (fold(&rule.dependent_male), fold(&rule.dependent_female));
            let problem = if m.is_empty() || f.is_empty() {
                Some("empty dependent")
            } else if m == f {
                Some("male and female dependents are identical")
            } else if rule.window < 1 {
                Some("window must be at least 1")
            } else if !is_single_word(mode, &m) || !is_single_word(mode, &f) {
                Some("dependents must be single words")
            } else {
                None
            };
            if let Some(p) = problem {
                report.bad_rules.push((rule.dependent_male.clone(), p.to_string()));
            }
        }

        report.pass = report.duplicates.is_empty()
            && report.cross_gender.is_empty()
            && report.asymmetric.is_empty()
            && report.degenerate.is_empty()
            && report.multi_word.is_empty()
            && report.bad_rules.is_empty();
        report
    }

    pub fn first_error(&self) -> Option<LexiconError> {
        if let Some(word) = self.degenerate.first() {
            return Some(LexiconError::DegenerateEntry { word: word.clone() });
        }
        if let Some(word) = self.multi_word.first() {
            return Some(LexiconError::MultiWord { word: word.clone() });
        }
        if let Some((word, side)) = self.duplicates.first() {
            let side = if side == "male" { "male" } else { "female" };
            return Some(LexiconError::DuplicateWord {
                word: word.clone(),
                side,
            });
        }
        if let Some(word) = self.cross_gender.first() {
            return Some(LexiconError::CrossGender { word: word.clone() });
        }
        if let Some(word) = self.asymmetric.first() {
            return Some(LexiconError::Asymmetric { word: word.clone() });
        }
        if let Some((dep, msg)) = self.bad_rules.first() {
            return Some(LexiconError::BadAgreementRule {
                dependent: dep.clone(),
                message: msg.clone(),
            });
        }
        None
    }
}

fn is_single_word(mode: MatchMode, word: &str) -> bool {
    if word.chars().any(char::is_whitespace) {
        return false;
    }
    match mode {
        MatchMode::Token => text::word_tokens(word).len() == 1,
        MatchMode::Substring => true,
    }
}

/// A parsed lexicon file together with non-fatal warnings.
#[derive(Debug, Clone)]
pub struct ParsedLexicon {
    pub lexicon: GenderLexicon,
    pub warnings: Vec<String>,
}

/// Parse the tab-separated lexicon format:
///
/// ```text
/// lang=de
/// match=token
/// # comment
/// Mann	Frau
/// #agreement
/// ein	eine	article	2
/// ```
#[allow(clippy::tabs_in_doc_comments)]
pub fn parse_lexicon(source: &str) -> Result<ParsedLexicon, LexiconError> {
    let mut warnings = Vec::new();
    let mut language: Option<String> = None;
    let mut mode: Option<MatchMode> = None;
    let mut entries = Vec::new();
    let mut rules = Vec::new();
    let mut in_agreement = false;
    let mut seen_body = false;

    for (i, raw) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        let parse_err = |message: String| LexiconError::Parse {
            line: line_no,
            message,
        };
        if line.trim().is_empty() {
            continue;
        }
        if line.trim() == "#agreement" {
            in_agreement = true;
            seen_body = true;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if let Some(code) = line.strip_prefix("lang=") {
            if seen_body {
                return Err(parse_err("`lang=` header must precede entries".into()));
            }
            language = Some(code.trim().to_string());
            continue;
        }
        if let Some(m) = line.strip_prefix("match=") {
            if seen_body {
                return Err(parse_err("`match=` header must precede entries".into()));
            }
            mode = Some(m.trim().parse().map_err(parse_err)?);
            continue;
        }
        seen_body = true;
        let fields: Vec<&str> = line.split('\t').collect();
        if in_agreement {
            if fields.len() != 4 {
                return Err(parse_err(format!(
                    "agreement rule needs 4 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            let scope = fields[2].trim().parse().map_err(parse_err)?;
            let window = fields[3]
                .trim()
                .parse::<usize>()
                .map_err(|e| parse_err(format!("bad window `{}`: {e}", fields[3].trim())))?;
            rules.push(AgreementRule {
                dependent_male: fields[0].trim().to_string(),
                dependent_female: fields[1].trim().to_string(),
                scope,
                window,
            });
        } else {
            if fields.len() != 2 {
                return Err(parse_err(format!(
                    "gender pair needs 2 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            entries.push(GenderPair::new(fields[0].trim(), fields[1].trim()));
        }
    }

    let language = language.unwrap_or_else(|| {
        warnings.push("no `lang=` header; language set to `und`".to_string());
        "und".to_string()
    });
    if entries.is_empty() {
        warnings.push("lexicon has no gender pairs".to_string());
    }
    let lexicon = GenderLexicon::new(language, mode.unwrap_or_default(), entries, rules)?;
    Ok(ParsedLexicon { lexicon, warnings })
}

/// Render a lexicon back into the text format accepted by [`parse_lexicon`].
pub fn render_lexicon(lexicon: &GenderLexicon) -> String {
    let mut out = format!(
        "lang={}\nmatch={}\n",
        lexicon.language(),
        match lexicon.match_mode() {
            MatchMode::Token => "token",
            MatchMode::Substring => "substring",
        }
    );
    for pair in lexicon.entries() {
        out.push_str(&format!("{}\t{}\n", pair.male, pair.female));
    }
    if !lexicon.agreement_rules().is_empty() {
        out.push_str("#agreement\n");
        for r in lexicon.agreement_rules() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                r.dependent_male,
                r.dependent_female,
                r.scope.as_str(),
                r.window
            ));
        }
    }
    out
}
