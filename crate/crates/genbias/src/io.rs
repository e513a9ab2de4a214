//! Lexicon, corpus and newline-delimited JSON files.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use genbias_core::corpus::{self, GenderedPartition, ParallelPair, PartitionClass};
use genbias_core::lexicon::{self, ParsedLexicon};
use genbias_core::{GenderLexicon, SentenceRecord};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn load_lexicon(path: &Path) -> Result<ParsedLexicon> {
    let source = read_text(path)?;
    lexicon::parse_lexicon(&source).map_err(|source| Error::Lexicon {
        path: path.to_path_buf(),
        source,
    })
}

fn read_text(path: &Path) -> Result<String> {
    let lines = read_lines(path)?;
    Ok(lines.join("\n"))
}

/// Read a UTF-8 text file line by line. LF and CRLF endings are accepted;
/// invalid UTF-8 is reported with its 1-based line number.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut lines = Vec::new();
    let mut buf = Vec::new();
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        if buf.last() == Some(&b'\n') {
            buf.pop();
        }
        if buf.last() == Some(&b'\r') {
            buf.pop();
        }
        let line = String::from_utf8(std::mem::take(&mut buf)).map_err(|_| Error::Utf8 {
            path: path.to_path_buf(),
            line: lines.len() + 1,
        })?;
        lines.push(line);
    }
    Ok(lines)
}

/// One record per non-empty line; ids are 0-based line numbers.
pub fn load_monolingual(path: &Path, lexicon: &GenderLexicon) -> Result<Vec<SentenceRecord>> {
    let lines = read_lines(path)?;
    Ok(corpus::records_from_lines(
        lines.iter().map(String::as_str).enumerate(),
        lexicon.language(),
        lexicon,
    ))
}

pub fn load_parallel(
    source: &Path,
    target: &Path,
    source_lexicon: &GenderLexicon,
    target_lexicon: &GenderLexicon,
) -> Result<Vec<ParallelPair>> {
    let src = read_lines(source)?;
    let tgt = read_lines(target)?;
    let src: Vec<&str> = src.iter().map(String::as_str).collect();
    let tgt: Vec<&str> = tgt.iter().map(String::as_str).collect();
    Ok(corpus::align_parallel(&src, &tgt, source_lexicon, target_lexicon)?)
}

/// Sentence ids, one per line; blank lines and `#` comments are ignored.
pub fn load_stoplist(path: &Path) -> Result<BTreeSet<u64>> {
    read_lines(path)?
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(n, l)| {
            l.trim()
                .parse::<u64>()
                .map_err(|e| Error::config(format!("{}:{}: bad sentence id: {e}", path.display(), n + 1)))
        })
        .collect()
}

pub fn write_ndjson<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_ndjson<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_lines(path)?
        .iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// One line of a partition file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRecord {
    pub id: u64,
    pub text: String,
    pub gender: PartitionClass,
    /// Token position of the gender word for single-gender sentences.
    pub position: Option<usize>,
    pub words: Vec<String>,
}

pub fn partition_records(partition: &GenderedPartition) -> Vec<PartitionRecord> {
    partition
        .classified()
        .into_iter()
        .map(|(class, r)| PartitionRecord {
            id: r.id,
            text: r.text.clone(),
            gender: class,
            position: match r.matches.as_slice() {
                [m] => Some(m.position),
                _ => None,
            },
            words: r.matches.iter().map(|m| m.word.clone()).collect(),
        })
        .collect()
}
