use alloc::string::String;

/// Casing shape of a source word, replicated onto its substitute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CasePattern {
    Lower,
    Title,
    Upper,
    /// Anything else, including words without cased characters.
    Mixed,
}

impl CasePattern {
    pub fn of(word: &str) -> Self {
        let mut cased = word.chars().filter(|c| c.is_lowercase() || c.is_uppercase());
        let Some(first) = cased.next() else {
            return CasePattern::Mixed;
        };
        let rest: String = cased.collect();
        let rest_lower = rest.chars().all(char::is_lowercase);
        let rest_upper = rest.chars().all(char::is_uppercase);
        match (first.is_uppercase(), rest_lower, rest_upper) {
            // a single cased letter ("I", "O") reads as Title
            (true, true, true) => CasePattern::Title,
            (true, _, true) => CasePattern::Upper,
            (true, true, _) => CasePattern::Title,
            (false, true, _) => CasePattern::Lower,
            _ => CasePattern::Mixed,
        }
    }
}

/// Recase `word` to follow `pattern`; `Mixed` keeps `word` as given.
pub fn apply_casing(word: &str, pattern: CasePattern) -> String {
    match pattern {
        CasePattern::Lower => word.to_lowercase(),
        CasePattern::Upper => word.to_uppercase(),
        CasePattern::Title => {
            let mut chars = word.chars();
            match chars.next() {
                Some(first) => {
                    let mut out: String = first.to_uppercase().collect();
                    out.push_str(&chars.as_str().to_lowercase());
                    out
                }
                None => String::new(),
            }
        }
        CasePattern::Mixed => String::from(word),
    }
}
