use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::record::RawRecord;
use super::vocab::Vocabulary;
use crate::error::{Error, Result};

/// A preprocessed abstract: lemmatized, stopword-free terms in original order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub year: i32,
    pub tokens: Vec<String>,
    /// Vocabulary indices; `None` until [`encode`] runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoded: Option<Vec<u32>>,
}

impl Document {
    /// Set by [`encode`] when no token survived vocabulary truncation.
    pub fn is_excluded(&self) -> bool {
        matches!(&self.encoded, Some(e) if e.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessOptions {
    pub min_token_len: usize,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self { min_token_len: 2 }
    }
}

/// Lowercase and split on every non-alphabetic character.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

pub fn preprocess(
    record: &RawRecord,
    stopwords: &HashSet<String>,
    lemma_lexicon: &HashMap<String, String>,
    options: &PreprocessOptions,
) -> Result<Document> {
    let tokens: Vec<String> = tokenize(&record.abstract_text)
        .map(|t| lemma_lexicon.get(&t).cloned().unwrap_or(t))
        .filter(|t| t.chars().count() >= options.min_token_len && !stopwords.contains(t))
        .collect();
    if tokens.is_empty() {
        return Err(Error::EmptyAfterPreprocessing { id: record.id.clone() });
    }
    Ok(Document {
        id: record.id.clone(),
        year: record.year,
        tokens,
        encoded: None,
    })
}

/// Map in-vocabulary tokens to their indices; out-of-vocabulary tokens are dropped.
pub fn encode(mut document: Document, vocab: &Vocabulary) -> Document {
    let encoded = document
        .tokens
        .iter()
        .filter_map(|t| vocab.index_of(t))
        .map(|i| i as u32)
        .collect();
    document.encoded = Some(encoded);
    document
}

pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// Two whitespace-separated columns, `surface lemma`.
pub fn parse_lemma_lexicon(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split_whitespace();
        match (cols.next(), cols.next(), cols.next()) {
            (Some(surface), Some(lemma), None) => {
                map.insert(surface.to_lowercase(), lemma.to_lowercase());
            }
            _ => {
                return Err(Error::Parse {
                    record: format!("lemma lexicon line {}", n + 1),
                    message: format!("expected two columns, got `{line}`"),
                })
            }
        }
    }
    Ok(map)
}

pub fn load_stopwords(path: &Path) -> Result<HashSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stopwords(&text))
}

pub fn load_lemma_lexicon(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lemma_lexicon(&text)
}
