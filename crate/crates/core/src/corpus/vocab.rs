use std::collections::HashMap;
use std::fmt::Write as _;

use super::text::Document;
use crate::error::{Error, Result};

/// Terms ordered by descending corpus frequency (ties lexicographic),
/// truncated to the shortest prefix covering `energy_fraction` of all
/// token occurrences.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    energy_fraction: f64,
    total_tokens: u64,
}

impl Vocabulary {
    fn from_parts(terms: Vec<String>, counts: Vec<u64>, energy_fraction: f64, total_tokens: u64) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self {
            terms,
            counts,
            index,
            energy_fraction,
            total_tokens,
        }
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn energy_fraction(&self) -> f64 {
        self.energy_fraction
    }

    /// Token count of the full (untruncated) corpus.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Fraction of all corpus tokens covered by the selected terms.
    pub fn energy(&self) -> f64 {
        self.counts.iter().sum::<u64>() as f64 / self.total_tokens as f64
    }

    /// `rank term count` per line, rank 0-based and equal to the term index.
    /// A leading comment records the selection parameters.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# energy_fraction={} total_tokens={}\n",
            self.energy_fraction, self.total_tokens
        );
        for (i, (t, c)) in self.terms.iter().zip(&self.counts).enumerate() {
            let _ = writeln!(out, "{i} {t} {c}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse {
            record: format!("vocabulary line {line}"),
            message: msg.to_string(),
        };
        let mut energy_fraction = 1.0;
        let mut total = None;
        let mut terms = Vec::new();
        let mut counts = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("energy_fraction", v)) => {
                            energy_fraction = v.parse().map_err(|_| bad(n + 1, "bad fraction"))?
                        }
                        Some(("total_tokens", v)) => total = Some(v.parse().map_err(|_| bad(n + 1, "bad total"))?),
                        _ => {}
                    }
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            let [rank, term, count] = cols[..] else {
                return Err(bad(n + 1, "expected `rank term count`"));
            };
            if rank.parse::<usize>().ok() != Some(terms.len()) {
                return Err(bad(n + 1, "ranks must be consecutive from 0"));
            }
            terms.push(term.to_string());
            counts.push(count.parse().map_err(|_| bad(n + 1, "bad count"))?);
        }
        let total = total.unwrap_or_else(|| counts.iter().sum());
        Ok(Self::from_parts(terms, counts, energy_fraction, total))
    }
}

/// Count every token occurrence and keep the minimal most-frequent prefix
/// whose share of the total count reaches `energy_fraction`.
pub fn build_vocabulary(documents: &[Document], energy_fraction: f64) -> Result<Vocabulary> {
    if !(energy_fraction > 0.0 && energy_fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "energy_fraction must be in (0, 1], got {energy_fraction}"
        )));
    }
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for doc in documents {
        for t in &doc.tokens {
            *freq.entry(t.as_str()).or_default() += 1;
        }
    }
    let total: u64 = freq.values().sum();
    if total == 0 {
        return Err(Error::EmptyCorpus("no tokens to build a vocabulary from".into()));
    }
    let mut ranked: Vec<(&str, u64)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut covered = 0u64;
    let mut take = ranked.len();
    for (i, (_, c)) in ranked.iter().enumerate() {
        covered += c;
        if covered as f64 / total as f64 >= energy_fraction {
            take = i + 1;
            break;
        }
    }
    ranked.truncate(take);
    let (terms, counts) = ranked.into_iter().map(|(t, c)| (t.to_string(), c)).unzip();
    Ok(Vocabulary::from_parts(terms, counts, energy_fraction, total))
}
