use rayon::prelude::*;

use super::{
    generate_corpus, match_epoch, score_events, synthetic_terms, EventScores, GenerativeSpec, GroundTruth, Matching,
};
use crate::error::Result;
use crate::graph::{build_graph, classify_events, Measure, SimilarityGraph, TopicEvent};
use crate::hdp::{fit_epoch, Diagnostics, FitConfig, Topic};
use crate::stats::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub fit: FitConfig,
    pub measure: Measure,
    pub threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            fit: FitConfig::default(),
            measure: Measure::Jaccard,
            threshold: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub truth: GroundTruth,
    pub epoch_topics: Vec<(usize, Vec<Topic>)>,
    pub diagnostics: Vec<Diagnostics>,
    pub graph: SimilarityGraph,
    pub events: Vec<TopicEvent>,
    /// Per-epoch matchings, concatenated.
    pub matching: Matching,
    pub scores: EventScores,
}

/// Generate the corpus, fit every epoch with seed `derive_seed(master, e)`,
/// link the epochs, classify events and score them against the plan.
pub fn evaluate(spec: &GenerativeSpec, config: &EvalConfig, master_seed: u64) -> Result<Evaluation> {
    let (docs, truth) = generate_corpus(spec)?;
    let terms = synthetic_terms(spec.vocab_size);
    let mut by_epoch = vec![Vec::new(); spec.epochs];
    for d in docs {
        by_epoch[d.epoch].push(d.words);
    }
    let fitted: Vec<(Vec<Topic>, Diagnostics)> = by_epoch
        .par_iter()
        .enumerate()
        .map(|(e, epoch_docs)| {
            fit_epoch(
                epoch_docs,
                &terms,
                spec.vocab_size,
                &config.fit,
                derive_seed(master_seed, e as u64),
                e,
            )
        })
        .collect::<Result<_>>()?;
    let (topics, diagnostics): (Vec<_>, Vec<_>) = fitted.into_iter().unzip();
    let epoch_topics: Vec<(usize, Vec<Topic>)> = topics.into_iter().enumerate().collect();

    let graph = build_graph(&epoch_topics, config.measure, config.threshold)?;
    let events = classify_events(&graph);
    let mut pairs = Vec::new();
    for (e, topics) in &epoch_topics {
        if !topics.is_empty() {
            pairs.extend(match_epoch(*e, topics, &truth, config.measure)?.pairs);
        }
    }
    let score = if pairs.is_empty() {
        0.0
    } else {
        pairs.iter().map(|p| p.similarity).sum::<f64>() / pairs.len() as f64
    };
    let matching = Matching { pairs, score };
    let scores = score_events(&events, &truth.events, &matching);
    Ok(Evaluation {
        truth,
        epoch_topics,
        diagnostics,
        graph,
        events,
        matching,
        scores,
    })
}
