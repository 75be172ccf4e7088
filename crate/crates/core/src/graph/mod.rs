//! Inter-epoch topic similarity graph and the analyses built on it.

mod events;
mod export;
mod lineage;
mod query;
mod similarity;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hdp::Topic;

pub use events::{classify_events, EventKind, TopicEvent, BOUNDARY_CONVENTION};
pub use export::{
    events_from_csv, events_to_csv, to_dot, EdgeExport, GraphExport, GraphMeta, NodeExport, NODE_TOP_TERMS,
};
pub use lineage::{trace_lineage, Direction};
pub use query::find_topic;
pub use similarity::{similarity, similarity_unchecked, Measure, NORMALIZATION_TOL};

/// Identifies a topic within the whole run: `(epoch, topic_id)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TopicNode {
    pub epoch: usize,
    pub topic_id: usize,
}

impl TopicNode {
    pub fn new(epoch: usize, topic_id: usize) -> Self {
        Self { epoch, topic_id }
    }
}

impl fmt::Display for TopicNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.epoch, self.topic_id)
    }
}

impl FromStr for TopicNode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parsed = s
            .split_once(':')
            .and_then(|(e, t)| Some((e.trim().parse().ok()?, t.trim().parse().ok()?)));
        match parsed {
            Some((epoch, topic_id)) => Ok(TopicNode { epoch, topic_id }),
            None => Err(Error::invalid(format!("expected `<epoch>:<topic_id>`, got `{s}`"))),
        }
    }
}

impl From<&Topic> for TopicNode {
    fn from(t: &Topic) -> Self {
        TopicNode::new(t.epoch, t.topic_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: TopicNode,
    pub to: TopicNode,
    pub weight: f64,
}

/// Directed graph whose edges run only from an epoch to the next one in
/// the epoch sequence, weighted by topic similarity above a threshold.
#[derive(Debug, Clone)]
pub struct SimilarityGraph {
    epochs: Vec<usize>,
    nodes: Vec<Topic>,
    index: HashMap<TopicNode, usize>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    measure: Measure,
    threshold: f64,
}

impl SimilarityGraph {
    fn assemble(epochs: Vec<usize>, nodes: Vec<Topic>, edges: Vec<Edge>, measure: Measure, threshold: f64) -> Self {
        let index: HashMap<TopicNode, usize> = nodes.iter().enumerate().map(|(i, t)| (TopicNode::from(t), i)).collect();
        let mut out_edges = vec![Vec::new(); nodes.len()];
        let mut in_edges = vec![Vec::new(); nodes.len()];
        for (e, edge) in edges.iter().enumerate() {
            out_edges[index[&edge.from]].push(e);
            in_edges[index[&edge.to]].push(e);
        }
        Self {
            epochs,
            nodes,
            index,
            edges,
            out_edges,
            in_edges,
            measure,
            threshold,
        }
    }

    /// Epochs in sequence order, including epochs without topics.
    pub fn epochs(&self) -> &[usize] {
        &self.epochs
    }

    pub fn nodes(&self) -> impl Iterator<Item = TopicNode> + '_ {
        self.nodes.iter().map(TopicNode::from)
    }

    pub fn topics(&self) -> &[Topic] {
        &self.nodes
    }

    pub fn topic(&self, node: TopicNode) -> Option<&Topic> {
        self.index.get(&node).map(|&i| &self.nodes[i])
    }

    pub fn contains(&self, node: TopicNode) -> bool {
        self.index.contains_key(&node)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn out_edges(&self, node: TopicNode) -> impl Iterator<Item = &Edge> + '_ {
        self.adjacent(node, &self.out_edges)
    }

    pub fn in_edges(&self, node: TopicNode) -> impl Iterator<Item = &Edge> + '_ {
        self.adjacent(node, &self.in_edges)
    }

    fn adjacent<'a>(&'a self, node: TopicNode, table: &'a [Vec<usize>]) -> impl Iterator<Item = &'a Edge> + 'a {
        self.index
            .get(&node)
            .map(|&i| table[i].as_slice())
            .unwrap_or(&[])
            .iter()
            .map(move |&e| &self.edges[e])
    }

    pub fn out_degree(&self, node: TopicNode) -> usize {
        self.out_edges(node).count()
    }

    pub fn in_degree(&self, node: TopicNode) -> usize {
        self.in_edges(node).count()
    }

    /// Topics of one epoch, in topic order.
    pub fn epoch_topics(&self, epoch: usize) -> impl Iterator<Item = &Topic> + '_ {
        self.nodes.iter().filter(move |t| t.epoch == epoch)
    }

    /// Sub-graph over `keep` nodes with exactly the listed edges.
    pub(crate) fn restrict(&self, keep: &[TopicNode], edges: Vec<Edge>) -> SimilarityGraph {
        let mut keep_idx: Vec<usize> = keep.iter().filter_map(|n| self.index.get(n).copied()).collect();
        keep_idx.sort_unstable();
        keep_idx.dedup();
        let nodes: Vec<Topic> = keep_idx.iter().map(|&i| self.nodes[i].clone()).collect();
        let mut edges = edges;
        let pos = |n: &TopicNode| self.index[n];
        edges.sort_by_key(|e| (pos(&e.from), pos(&e.to)));
        edges.dedup_by_key(|e| (e.from, e.to));
        let (lo, hi) = (nodes.iter().map(|t| t.epoch).min(), nodes.iter().map(|t| t.epoch).max());
        let epochs = match (lo, hi) {
            (Some(lo), Some(hi)) => self.epochs.iter().copied().filter(|&e| lo <= e && e <= hi).collect(),
            _ => Vec::new(),
        };
        SimilarityGraph::assemble(epochs, nodes, edges, self.measure, self.threshold)
    }
}

/// Link every topic of each epoch to every sufficiently similar topic of
/// the following epoch. `epoch_topics` must be in strictly increasing epoch
/// order; consecutive entries are the adjacent pairs. An edge is kept iff
/// its weight exceeds `threshold`.
pub fn build_graph(epoch_topics: &[(usize, Vec<Topic>)], measure: Measure, threshold: f64) -> Result<SimilarityGraph> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::config(
            "threshold",
            format!("must be in [0, 1), got {threshold}"),
        ));
    }
    if epoch_topics.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::invalid("epochs must be strictly increasing"));
    }
    let mut seen = std::collections::HashSet::new();
    for (epoch, topics) in epoch_topics {
        for t in topics {
            if t.epoch != *epoch {
                return Err(Error::invalid(format!(
                    "topic {} labelled epoch {} listed under epoch {epoch}",
                    t.topic_id, t.epoch
                )));
            }
            if !seen.insert(TopicNode::from(t)) {
                return Err(Error::invalid(format!("duplicate topic node {}", TopicNode::from(t))));
            }
        }
    }

    let blocks: Vec<Vec<Edge>> = epoch_topics
        .par_windows(2)
        .map(|pair| {
            let (_, from) = &pair[0];
            let (_, to) = &pair[1];
            let mut block = Vec::new();
            for a in from {
                for b in to {
                    let weight = similarity(&a.phi, &b.phi, measure)?;
                    if weight > threshold {
                        block.push(Edge {
                            from: a.into(),
                            to: b.into(),
                            weight,
                        });
                    }
                }
            }
            Ok(block)
        })
        .collect::<Result<_>>()?;

    let epochs = epoch_topics.iter().map(|(e, _)| *e).collect();
    let nodes = epoch_topics.iter().flat_map(|(_, t)| t.iter().cloned()).collect();
    Ok(SimilarityGraph::assemble(
        epochs,
        nodes,
        blocks.into_iter().flatten().collect(),
        measure,
        threshold,
    ))
}
