//! Sentence records and tokenization.
//!
//! Token mode splits on whitespace and detaches punctuation; apostrophes and
//! hyphens between two word characters stay inside the word ("don't",
//! "mother-in-law"). Substring mode first carves out lexicon hits and then
//! emits every remaining non-ASCII character as its own token, with ASCII
//! words kept whole.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::lexicon::{GenderLexicon, GenderMatch, MatchMode};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// Byte offsets into the sentence text.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: u64,
    pub language: String,
    pub text: String,
    pub tokens: Vec<Token>,
    pub matches: Vec<GenderMatch>,
}

impl SentenceRecord {
    /// Tokenize `text` for `lexicon`'s match mode and record its gender-word hits.
    pub fn annotate(id: u64, language: &str, text: &str, lexicon: &GenderLexicon) -> Self {
        let tokens = tokenize(text, lexicon);
        let mut record = SentenceRecord {
            id,
            language: language.to_string(),
            text: text.to_string(),
            tokens,
            matches: Vec::new(),
        };
        record.matches = lexicon.find_gender_words(&record);
        record
    }

    pub fn token_texts(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.text.as_str())
    }

    /// Copy of this record with token `position` replaced by `word`.
    /// Spans of later tokens shift by the length difference; matches are
    /// left for the caller to recompute.
    pub fn with_token_replaced(&self, position: usize, word: &str) -> SentenceRecord {
        let mut out = self.clone();
        out.replace_token(position, word);
        out
    }

    pub(crate) fn replace_token(&mut self, position: usize, word: &str) {
        let tok = &self.tokens[position];
        let (start, end) = (tok.start, tok.end);
        self.text.replace_range(start..end, word);
        let delta = word.len() as isize - (end - start) as isize;
        self.tokens[position] = Token {
            text: word.to_string(),
            start,
            end: start + word.len(),
        };
        for t in &mut self.tokens[position + 1..] {
            t.start = (t.start as isize + delta) as usize;
            t.end = (t.end as isize + delta) as usize;
        }
    }
}

pub fn tokenize(text: &str, lexicon: &GenderLexicon) -> Vec<Token> {
    match lexicon.match_mode() {
        MatchMode::Token => word_tokens(text),
        MatchMode::Substring => substring_tokens(text, lexicon),
    }
}

fn is_connector(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-' | '\u{2010}')
}

/// Punctuation and symbol characters that always form their own token.
fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c as u32,
            0x00A1..=0x00BF
            | 0x00D7 | 0x00F7
            | 0x2010..=0x206F
            | 0x20A0..=0x20CF
            | 0x3000..=0x303F
            | 0xFE30..=0xFE4F
            | 0xFF01..=0xFF0F
            | 0xFF1A..=0xFF20
            | 0xFF3B..=0xFF40
            | 0xFF5B..=0xFF65)
}

/// Whitespace/punctuation tokenizer used for token-mode languages.
pub fn word_tokens(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut word_start: Option<usize> = None;
    let push = |tokens: &mut Vec<Token>, s: usize, e: usize| {
        tokens.push(Token {
            text: text[s..e].to_string(),
            start: s,
            end: e,
        })
    };

    for (i, &(at, c)) in chars.iter().enumerate() {
        let is_word = !c.is_whitespace() && !is_punct(c);
        let joins = is_connector(c)
            && word_start.is_some()
            && chars
                .get(i + 1)
                .is_some_and(|&(_, n)| !n.is_whitespace() && !is_punct(n));
        if is_word || joins {
            word_start.get_or_insert(at);
            continue;
        }
        if let Some(s) = word_start.take() {
            push(&mut tokens, s, at);
        }
        if !c.is_whitespace() {
            push(&mut tokens, at, at + c.len_utf8());
        }
    }
    if let Some(s) = word_start {
        push(&mut tokens, s, text.len());
    }
    tokens
}

fn substring_tokens(text: &str, lexicon: &GenderLexicon) -> Vec<Token> {
    let mut tokens = Vec::new();
    let gap_tokens = |from: usize, to: usize, tokens: &mut Vec<Token>| {
        for tok in word_tokens(&text[from..to]) {
            let (s, e) = (tok.start + from, tok.end + from);
            if tok.text.is_ascii() {
                tokens.push(Token { text: tok.text, start: s, end: e });
            } else {
                for (off, c) in tok.text.char_indices() {
                    let cs = s + off;
                    tokens.push(Token {
                        text: c.to_string(),
                        start: cs,
                        end: cs + c.len_utf8(),
                    });
                }
            }
        }
    };
    let mut cursor = 0;
    for (s, e) in lexicon.scan_substrings(text) {
        gap_tokens(cursor, s, &mut tokens);
        tokens.push(Token {
            text: text[s..e].to_string(),
            start: s,
            end: e,
        });
        cursor = e;
    }
    gap_tokens(cursor, text.len(), &mut tokens);
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::GenderPair;
    use alloc::vec;

    fn texts(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn splits_words_and_punctuation() {
        let t = word_tokens("\"Don't,\" said the mother-in-law.");
        assert_eq!(
            texts(&t),
            vec!["\"", "Don't", ",", "\"", "said", "the", "mother-in-law", "."]
        );
        assert!(word_tokens("  ").is_empty());
        assert_eq!(texts(&word_tokens("- he -")), vec!["-", "he", "-"]);
        assert_eq!(texts(&word_tokens("¿Dónde está él?")), vec!["¿", "Dónde", "está", "él", "?"]);
    }

    #[test]
    fn spans_index_into_text() {
        let text = "Ein guter Mann, sagt sie.";
        for tok in word_tokens(text) {
            assert_eq!(&text[tok.start..tok.end], tok.text);
        }
    }

    #[test]
    fn substring_mode_tokens() {
        let lex = GenderLexicon::new(
            "zh",
            MatchMode::Substring,
            vec![GenderPair::new("男服务员", "女服务员"), GenderPair::new("他", "她")],
            vec![],
        )
        .unwrap();
        let s = SentenceRecord::annotate(0, "zh", "女服务员过来了。", &lex);
        assert_eq!(texts(&s.tokens), vec!["女服务员", "过", "来", "了", "。"]);
        assert_eq!(s.matches.len(), 1);
        assert_eq!(s.matches[0].position, 0);
    }

    #[test]
    fn replacement_shifts_spans() {
        let lex = GenderLexicon::new("en", MatchMode::Token, vec![GenderPair::new("waiter", "waitress")], vec![])
            .unwrap();
        let s = SentenceRecord::annotate(0, "en", "The waitress came over.", &lex);
        let r = s.with_token_replaced(1, "waiter");
        assert_eq!(r.text, "The waiter came over.");
        for tok in &r.tokens {
            assert_eq!(&r.text[tok.start..tok.end], tok.text);
        }
    }
}
