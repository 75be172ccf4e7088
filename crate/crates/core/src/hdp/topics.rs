use serde::{Deserialize, Serialize};

use super::HdpState;
use crate::error::{Error, Result};

/// Sparse exports keep only probabilities above this value.
pub const SPARSE_EPSILON: f64 = 1e-8;
pub const TOP_TERMS_EXPORTED: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermProb {
    pub term: String,
    pub prob: f64,
}

/// One topic of one epoch: a distribution over the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Topic {
    pub epoch: usize,
    pub topic_id: usize,
    pub phi: Vec<f64>,
    /// Tokens assigned to the topic in the posterior sample.
    pub mass: u64,
    /// Highest-probability terms, descending.
    pub top_terms: Vec<TermProb>,
}

impl Topic {
    /// Build a topic from a probability vector, ranking the top terms.
    pub fn new(epoch: usize, topic_id: usize, phi: Vec<f64>, mass: u64, terms: &[String]) -> Self {
        let top_terms = rank_terms(&phi, terms, TOP_TERMS_EXPORTED);
        Self {
            epoch,
            topic_id,
            phi,
            mass,
            top_terms,
        }
    }

    pub fn prob_of(&self, word: usize) -> f64 {
        self.phi.get(word).copied().unwrap_or(0.0)
    }

    pub fn to_record(&self) -> TopicRecord {
        TopicRecord {
            epoch: self.epoch,
            topic_id: self.topic_id,
            mass: self.mass,
            vocab_size: self.phi.len(),
            phi: self
                .phi
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > SPARSE_EPSILON)
                .map(|(w, &p)| (w as u32, p))
                .collect(),
            top_terms: self.top_terms.iter().take(TOP_TERMS_EXPORTED).cloned().collect(),
        }
    }
}

/// Indices of the `n` largest entries, descending, ties by index.
pub(crate) fn top_indices(phi: &[f64], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..phi.len()).collect();
    idx.sort_by(|&a, &b| phi[b].total_cmp(&phi[a]).then(a.cmp(&b)));
    idx.truncate(n);
    idx
}

fn rank_terms(phi: &[f64], terms: &[String], n: usize) -> Vec<TermProb> {
    top_indices(phi, n)
        .into_iter()
        .map(|w| TermProb {
            term: terms.get(w).cloned().unwrap_or_else(|| w.to_string()),
            prob: phi[w],
        })
        .collect()
}

/// Serialized form of a topic: sparse phi as `[word, prob]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRecord {
    pub epoch: usize,
    pub topic_id: usize,
    pub mass: u64,
    pub vocab_size: usize,
    pub phi: Vec<(u32, f64)>,
    pub top_terms: Vec<TermProb>,
}

impl TopicRecord {
    /// Re-inflate to a dense topic. Dropped entries become zero and the
    /// vector is renormalized.
    pub fn into_topic(self) -> Result<Topic> {
        let mut phi = vec![0.0; self.vocab_size];
        for (w, p) in self.phi {
            let slot = phi.get_mut(w as usize).ok_or_else(|| Error::Parse {
                record: format!("topic {}:{}", self.epoch, self.topic_id),
                message: format!("word {w} outside vocabulary of {}", self.vocab_size),
            })?;
            *slot = p;
        }
        let total: f64 = phi.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::Parse {
                record: format!("topic {}:{}", self.epoch, self.topic_id),
                message: "empty distribution".into(),
            });
        }
        phi.iter_mut().for_each(|p| *p /= total);
        Ok(Topic {
            epoch: self.epoch,
            topic_id: self.topic_id,
            phi,
            mass: self.mass,
            top_terms: self.top_terms,
        })
    }
}

/// Posterior point estimate `phi_w = (n_kw + eta) / (n_k + V eta)` for every
/// active topic, ordered by descending mass (ties by internal order) and
/// numbered in that order. Topics lighter than `min_mass` are dropped.
pub fn estimate_topics(state: &HdpState, epoch: usize, terms: &[String], min_mass: u64) -> Vec<Topic> {
    let v = state.vocab_size();
    let eta = state.hyper().eta;
    let totals = state.topic_totals();
    let mut order: Vec<usize> = (0..state.num_topics()).collect();
    order.sort_by(|&a, &b| totals[b].cmp(&totals[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .filter(|&k| totals[k] >= min_mass)
        .enumerate()
        .map(|(id, k)| {
            let denom = totals[k] as f64 + v as f64 * eta;
            let phi = (0..v)
                .map(|w| (state.topic_word_count(k, w) as f64 + eta) / denom)
                .collect();
            Topic::new(epoch, id, phi, totals[k], terms)
        })
        .collect()
}
