//! Synthetic corpora with planted topics and scripted dynamics, and the
//! scoring used to check that the pipeline recovers them.

mod eval;
mod generate;
mod matching;
mod presets;
mod score;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use eval::{evaluate, EvalConfig, Evaluation};
pub use generate::{generate_corpus, synthetic_terms, to_documents, GroundTruth, SyntheticDoc, SYNTH_BASE_YEAR};
pub use matching::{greedy_match, match_epoch, match_topics, MatchedPair, Matching};
pub use presets::{disjoint_blocks, disjoint_spec, emergence_spec, merge_spec, split_spec, Preset};
pub use score::{planted_events, score_events, translate_events, EventScores, KindScore, PlantedEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    SplitFrom,
    MergedFrom,
    DriftOf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lineage {
    pub relation: Relation,
    pub parents: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTopic {
    pub id: usize,
    pub phi_true: Vec<f64>,
    /// First and last live epoch, inclusive.
    pub lifespan: (usize, usize),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lineage: Option<Lineage>,
}

impl PlantedTopic {
    pub fn is_live(&self, epoch: usize) -> bool {
        self.lifespan.0 <= epoch && epoch <= self.lifespan.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerativeSpec {
    pub vocab_size: usize,
    pub epochs: usize,
    pub docs_per_epoch: usize,
    pub tokens_per_doc: usize,
    /// Symmetric Dirichlet parameter for per-document topic weights.
    pub mixing_concentration: f64,
    /// Per-epoch blend weight towards a fresh random distribution.
    pub drift_rate: f64,
    pub seed: u64,
    pub planted: Vec<PlantedTopic>,
}

impl GenerativeSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vocab_size", self.vocab_size),
            ("epochs", self.epochs),
            ("docs_per_epoch", self.docs_per_epoch),
            ("tokens_per_doc", self.tokens_per_doc),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(Error::config(field, "must be >= 1"));
            }
        }
        if !(self.mixing_concentration > 0.0 && self.mixing_concentration.is_finite()) {
            return Err(Error::config("mixing_concentration", "must be positive and finite"));
        }
        if !(0.0..1.0).contains(&self.drift_rate) {
            return Err(Error::config("drift_rate", "must be in [0, 1)"));
        }
        let mut ids = std::collections::HashSet::new();
        for t in &self.planted {
            let field = format!("planted[{}]", t.id);
            if !ids.insert(t.id) {
                return Err(Error::config(&field, "duplicate id"));
            }
            if t.phi_true.len() != self.vocab_size {
                return Err(Error::config(
                    &field,
                    format!(
                        "phi_true has {} entries, expected {}",
                        t.phi_true.len(),
                        self.vocab_size
                    ),
                ));
            }
            if t.phi_true.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                return Err(Error::config(&field, "phi_true has negative or non-finite entries"));
            }
            let total: f64 = t.phi_true.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::config(&field, format!("phi_true sums to {total}")));
            }
            let (first, last) = t.lifespan;
            if first > last || last >= self.epochs {
                return Err(Error::config(
                    &field,
                    format!("lifespan ({first}, {last}) outside 0..{}", self.epochs),
                ));
            }
        }
        for t in &self.planted {
            if let Some(lineage) = &t.lineage {
                if lineage.parents.is_empty() || lineage.parents.iter().any(|p| !ids.contains(p) || *p == t.id) {
                    return Err(Error::config(
                        &format!("planted[{}]", t.id),
                        "lineage parents must be other planted ids",
                    ));
                }
            }
        }
        if let Some(e) = (0..self.epochs).find(|&e| !self.planted.iter().any(|t| t.is_live(e))) {
            return Err(Error::config("planted", format!("epoch {e} has no live topic")));
        }
        Ok(())
    }

    pub fn live_topics(&self, epoch: usize) -> impl Iterator<Item = &PlantedTopic> + '_ {
        self.planted.iter().filter(move |t| t.is_live(epoch))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::config("spec", e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }
}
